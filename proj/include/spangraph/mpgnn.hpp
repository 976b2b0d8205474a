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

// Message-passing replacements for the graph transformer. Node n receives
// messages from its incoming neighbours N(n) = {m : m -> n}:
//
//   GCN   z_n' = W z_n / d_n + sum_m W z_m / sqrt(d_n d_m) + b,
//         d = in-degree + 1 (self loop)
//   GAT   z_n' = sum_{m in N(n) + n} a_nm W z_m + b, a = softmax_m
//         LeakyReLU(a_dst . W z_n + a_src . W z_m), one head
//   SAGE  z_n' = W_self z_n + W_neigh mean_m z_m + b
//
// Edge states are a projection of [z_source ; z_target] so the edit and
// classification heads see the same layout as with the transformer.

#ifndef SPANGRAPH_MPGNN_HPP_
#define SPANGRAPH_MPGNN_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "spangraph/graph_builder.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

enum class MessagePassingVariant { kGcn, kGat, kSage };

inline MessagePassingVariant parse_variant(const std::string &s) {
  if (s == "gcn") return MessagePassingVariant::kGcn;
  if (s == "gat") return MessagePassingVariant::kGat;
  if (s == "sage") return MessagePassingVariant::kSage;
  throw ConfigError("unknown message-passing variant '" + s + "'");
}

struct MessagePassingConfig {
  MessagePassingVariant variant = MessagePassingVariant::kGcn;
  Index layers = 2;
  Index width = 0;
  bool undirected = false;
};

// Dense incoming adjacency: A(n, m) = 1 iff m -> n.
inline Matrix incoming_adjacency(int num_nodes, const std::vector<GraphEdge> &edges, bool undirected) {
  Matrix a = Matrix::Zero(num_nodes, num_nodes);
  for (const auto &e : edges) {
    a(e.target, e.source) = 1.0;
    if (undirected) a(e.source, e.target) = 1.0;
  }
  return a;
}

// One convolution. `adjacency` is the incoming matrix from
// incoming_adjacency; all variants reduce over neighbours with a
// permutation-invariant operator.
struct MessagePassingConv {
  MessagePassingVariant variant = MessagePassingVariant::kGcn;
  nn::Linear self_lin;   // GCN/GAT: shared W; SAGE: W_self
  nn::Linear neigh_lin;  // SAGE only
  Var att_src, att_dst;  // GAT only, D x 1

  MessagePassingConv() = default;
  MessagePassingConv(nn::ParameterStore &store, const std::string &name, MessagePassingVariant v,
                     Index width, std::mt19937_64 &rng)
      : variant(v) {
    switch (v) {
      case MessagePassingVariant::kGcn:
        self_lin = nn::Linear(store, name + ".lin", width, width, rng);
        break;
      case MessagePassingVariant::kGat:
        self_lin = nn::Linear(store, name + ".lin", width, width, rng);
        att_src = store.add(name + ".att_src", nn::xavier_uniform(width, 1, rng));
        att_dst = store.add(name + ".att_dst", nn::xavier_uniform(width, 1, rng));
        break;
      case MessagePassingVariant::kSage:
        self_lin = nn::Linear(store, name + ".lin_self", width, width, rng);
        neigh_lin = nn::Linear(store, name + ".lin_neigh", width, width, rng, /*with_bias=*/false);
        break;
    }
  }

  Var operator()(const Var &z, const Matrix &adjacency) const {
    const Index n = z.rows();
    switch (variant) {
      case MessagePassingVariant::kGcn: {
        Matrix norm = adjacency + Matrix::Identity(n, n);
        Eigen::VectorXd deg = norm.rowwise().sum();
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j)
            if (norm(i, j) != 0.0) norm(i, j) /= std::sqrt(deg(i) * deg(j));
        Var h = ag::matmul(z, self_lin.weight);
        Var out = ag::matmul(Var::constant(std::move(norm)), h);
        return ag::add_row(out, self_lin.bias);
      }
      case MessagePassingVariant::kGat: {
        Var h = ag::matmul(z, self_lin.weight);
        Var scores = ag::leaky_relu(ag::outer_sum(ag::matmul(h, att_dst), ag::matmul(h, att_src)), 0.2);
        Matrix mask = adjacency + Matrix::Identity(n, n);
        Var alpha = ag::masked_softmax_rows(scores, &mask);
        return ag::add_row(ag::matmul(alpha, h), self_lin.bias);
      }
      case MessagePassingVariant::kSage: {
        Matrix mean = adjacency;
        for (Index i = 0; i < n; ++i) {
          const double d = mean.row(i).sum();
          if (d > 0.0) mean.row(i) /= d;
        }
        Var agg = ag::matmul(Var::constant(std::move(mean)), z);
        return ag::add(self_lin(z), neigh_lin(agg));
      }
    }
    return z;
  }
};

// Stack of residual convolutions followed by layer normalization, plus the
// edge-state projection.
class MessagePassingNetwork {
 public:
  MessagePassingNetwork() = default;
  MessagePassingNetwork(nn::ParameterStore &store, const MessagePassingConfig &cfg, std::mt19937_64 &rng)
      : cfg_(cfg) {
    if (cfg.layers < 1) throw ConfigError("message passing needs at least one layer");
    for (Index l = 0; l < cfg.layers; ++l) {
      convs_.emplace_back(store, "mp.layer" + std::to_string(l), cfg.variant, cfg.width, rng);
    }
    norm_ = nn::LayerNorm(store, "mp.norm", cfg.width);
    edge_proj_ = nn::Linear(store, "mp.edge_state", 2 * cfg.width, cfg.width, rng);
  }

  const MessagePassingConfig &config() const { return cfg_; }
  const std::vector<MessagePassingConv> &convs() const { return convs_; }

  Var nodes(const Var &node_states, const std::vector<GraphEdge> &edges, const nn::Context &ctx) const {
    const Matrix adj = incoming_adjacency(static_cast<int>(node_states.rows()), edges, cfg_.undirected);
    Var z = node_states;
    for (std::size_t l = 0; l < convs_.size(); ++l) {
      z = ag::add(z, ctx.drop(ag::relu(convs_[l](z, adj))));
      if (!z.value().allFinite()) {
        throw NumericError("non-finite activations after message-passing layer " + std::to_string(l));
      }
    }
    return norm_(z);
  }

  // Edge state = W [z_source ; z_target] + b, one row per edge.
  Var edge_states(const Var &node_states, const std::vector<GraphEdge> &edges) const {
    if (edges.empty()) return Var::constant(Matrix(0, node_states.cols()));
    std::vector<Index> src, tgt;
    for (const auto &e : edges) {
      src.push_back(e.source);
      tgt.push_back(e.target);
    }
    return edge_proj_(ag::concat_cols({ag::gather_rows(node_states, src), ag::gather_rows(node_states, tgt)}));
  }

  const nn::Linear &edge_projection() const { return edge_proj_; }

 private:
  MessagePassingConfig cfg_;
  std::vector<MessagePassingConv> convs_;
  nn::LayerNorm norm_;
  nn::Linear edge_proj_;
};

}  // namespace spangraph

#endif  // SPANGRAPH_MPGNN_HPP_
