// Copyright 2026 The spangraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Graph-as-token-sequence refinement. Each node becomes the token
//   s_n + [p_n ; p_n]
// and each directed edge n -> m the token
//   [p_n ; p_m]            (optionally + W_e [s_n ; s_m])
// where p_* are rows of an identifier pool of width D/2. Token-type
// embeddings are added, a shared input projection applied, and the stacked
// tokens (nodes first) run through a transformer without positional terms.

#ifndef SPANGRAPH_GRAPH_TRANSFORMER_HPP_
#define SPANGRAPH_GRAPH_TRANSFORMER_HPP_

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "spangraph/graph_builder.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

enum class TokenKind { kNode, kEdge };
enum class AssignmentMode { kRandom, kDeterministic };

// pool_size x (D/2) rows, orthonormal at initialization.
class IdentifierPool {
 public:
  IdentifierPool() = default;
  IdentifierPool(nn::ParameterStore &store, Index pool_size, Index half_width,
                 std::mt19937_64 &rng, bool trainable = true) {
    if (pool_size < 1) throw ConfigError("identifier pool must have at least one row");
    if (pool_size > half_width) {
      throw ConfigError("identifier pool of " + std::to_string(pool_size) +
                        " rows cannot be orthonormal in width " + std::to_string(half_width));
    }
    table_ = store.add("gt.identifiers", orthonormal_rows(pool_size, half_width, rng));
    table_.set_requires_grad(trainable);
  }

  // Orthogonalizes a seeded Gaussian matrix; rows of the result satisfy
  // P P^T = I.
  static Matrix orthonormal_rows(Index rows, Index cols, std::mt19937_64 &rng) {
    Matrix g = nn::normal_matrix(cols, rows, 1.0, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cols, rows);
    return q.transpose();
  }

  const Var &table() const { return table_; }
  Index size() const { return table_.rows(); }
  Index half_width() const { return table_.cols(); }

 private:
  Var table_;
};

// Injective map node -> pool row. Random mode samples rows without
// replacement; deterministic mode uses rows 0..n-1 in node rank order.
inline std::vector<Index> assign_identifiers(int num_nodes, Index pool_size, AssignmentMode mode,
                                             std::mt19937_64 *rng = nullptr) {
  if (num_nodes < 0) throw ValidationError("negative node count");
  if (static_cast<Index>(num_nodes) > pool_size) {
    throw ValidationError("identifier pool of " + std::to_string(pool_size) +
                          " rows is too small for " + std::to_string(num_nodes) + " nodes");
  }
  std::vector<Index> rows(static_cast<std::size_t>(pool_size));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (mode == AssignmentMode::kRandom) {
    if (!rng) throw ValidationError("random identifier assignment needs an rng");
    // Partial Fisher-Yates: only the first num_nodes positions are drawn.
    for (int i = 0; i < num_nodes; ++i) {
      std::uniform_int_distribution<Index> pick(i, pool_size - 1);
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(*rng))]);
    }
  }
  rows.resize(static_cast<std::size_t>(num_nodes));
  return rows;
}

struct TokenizedGraph {
  Var tokens;      // Z^(0): (|V| + |E|) x D
  Var raw_tokens;  // before type embeddings and projection
  std::vector<TokenKind> kinds;
  std::vector<Index> assignment;
  std::vector<GraphEdge> edges;
};

class GraphTokenizer {
 public:
  GraphTokenizer() = default;
  GraphTokenizer(nn::ParameterStore &store, Index width, bool edge_features, std::mt19937_64 &rng)
      : width_(width) {
    node_type_ = store.add("gt.type_node", nn::normal_matrix(1, width, 0.02, rng));
    edge_type_ = store.add("gt.type_edge", nn::normal_matrix(1, width, 0.02, rng));
    input_ = nn::Linear(store, "gt.input", width, width, rng, /*with_bias=*/false);
    if (edge_features) edge_proj_ = nn::Linear(store, "gt.edge_features", 2 * width, width, rng);
  }

  bool edge_features() const { return edge_proj_.weight.defined(); }
  const Var &node_type() const { return node_type_; }
  const Var &edge_type() const { return edge_type_; }
  const nn::Linear &input() const { return input_; }

  TokenizedGraph operator()(const Var &node_reps, const std::vector<GraphEdge> &edges,
                            const IdentifierPool &pool, const std::vector<Index> &assignment) const {
    const Index n = node_reps.rows();
    if (node_reps.cols() != width_ || pool.half_width() * 2 != width_) {
      throw ValidationError("tokenize_graph: dimension mismatch (span width " +
                            std::to_string(node_reps.cols()) + ", identifier width " +
                            std::to_string(pool.half_width()) + ")");
    }
    if (static_cast<Index>(assignment.size()) != n) {
      throw ValidationError("tokenize_graph: assignment does not cover all nodes");
    }
    TokenizedGraph out;
    out.assignment = assignment;
    out.edges = edges;
    out.kinds.assign(static_cast<std::size_t>(n), TokenKind::kNode);
    out.kinds.insert(out.kinds.end(), edges.size(), TokenKind::kEdge);

    Var ids = ag::gather_rows(pool.table(), assignment);
    Var node_tokens = ag::add(node_reps, ag::concat_cols({ids, ids}));

    std::vector<Index> src, tgt;
    for (const auto &e : edges) {
      if (e.source < 0 || e.source >= n || e.target < 0 || e.target >= n) {
        throw ValidationError("tokenize_graph: edge endpoint without identifier");
      }
      src.push_back(e.source);
      tgt.push_back(e.target);
    }
    Var edge_tokens = ag::concat_cols({ag::gather_rows(ids, src), ag::gather_rows(ids, tgt)});
    if (edge_features() && !edges.empty()) {
      Var feats = ag::concat_cols({ag::gather_rows(node_reps, src), ag::gather_rows(node_reps, tgt)});
      edge_tokens = ag::add(edge_tokens, edge_proj_(feats));
    }
    out.raw_tokens = ag::concat_rows({node_tokens, edge_tokens});
    Var typed = ag::concat_rows({ag::add_row(node_tokens, node_type_), ag::add_row(edge_tokens, edge_type_)});
    out.tokens = input_(typed);
    return out;
  }

 private:
  Index width_ = 0;
  Var node_type_;
  Var edge_type_;
  nn::Linear input_;
  nn::Linear edge_proj_;
};

// Per-layer, per-head attention weights of one forward pass.
using AttentionTrace = std::vector<std::vector<Matrix>>;

class GraphTransformer {
 public:
  GraphTransformer() = default;
  GraphTransformer(nn::ParameterStore &store, Index width, Index layers, Index heads,
                   Index ffn_width, std::mt19937_64 &rng) {
    for (Index l = 0; l < layers; ++l) {
      blocks_.emplace_back(store, "gt.layer" + std::to_string(l), width, heads, ffn_width, rng);
    }
    norm_ = nn::LayerNorm(store, "gt.norm", width);
  }

  std::size_t layers() const { return blocks_.size(); }
  const std::vector<nn::TransformerBlock> &blocks() const { return blocks_; }

  Var operator()(const Var &tokens, const nn::Context &ctx, AttentionTrace *trace = nullptr) const {
    if (!tokens.value().allFinite()) throw NumericError("graph transformer input is non-finite");
    Var z = tokens;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      std::vector<Matrix> heads;
      z = blocks_[l](z, ctx, trace ? &heads : nullptr);
      if (trace) trace->push_back(std::move(heads));
      if (!z.value().allFinite()) {
        throw NumericError("non-finite activations after graph transformer layer " + std::to_string(l));
      }
    }
    return norm_(z);
  }

 private:
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
};

}  // namespace spangraph

#endif  // SPANGRAPH_GRAPH_TRANSFORMER_HPP_
