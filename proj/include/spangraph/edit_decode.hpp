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

#ifndef SPANGRAPH_EDIT_DECODE_HPP_
#define SPANGRAPH_EDIT_DECODE_HPP_

#include <algorithm>
#include <numeric>
#include <vector>

#include "spangraph/graph_builder.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

// sigma(w_k . z) for every token; one weight vector scores both nodes and
// edges.
class KeepScorer {
 public:
  KeepScorer() = default;
  KeepScorer(nn::ParameterStore &store, Index width, std::mt19937_64 &rng)
      : weight_(store.add("edit.keep_weight", nn::xavier_uniform(width, 1, rng))) {}
  explicit KeepScorer(Var weight) : weight_(std::move(weight)) {}

  const Var &weight() const { return weight_; }
  Var logits(const Var &states) const { return ag::matmul(states, weight_); }

 private:
  Var weight_;
};

struct KeepProbabilities {
  std::vector<double> node_keep;
  std::vector<double> edge_keep;
};

// Splits per-token keep logits (nodes first) into probabilities.
inline KeepProbabilities keep_probabilities(const Matrix &logits, int num_nodes) {
  KeepProbabilities p;
  for (Index i = 0; i < logits.rows(); ++i) {
    const double v = ag::stable_sigmoid(logits(i, 0));
    (i < num_nodes ? p.node_keep : p.edge_keep).push_back(v);
  }
  return p;
}

struct FinalStructure {
  std::vector<int> nodes;  // indices into the initial graph's nodes
  std::vector<int> edges;  // indices into the initial graph's edges
};

// Keeps every element whose probability strictly exceeds `threshold`.
inline FinalStructure threshold_structure(const KeepProbabilities &p, double threshold = 0.5) {
  FinalStructure f;
  for (std::size_t i = 0; i < p.node_keep.size(); ++i)
    if (p.node_keep[i] > threshold) f.nodes.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < p.edge_keep.size(); ++i)
    if (p.edge_keep[i] > threshold) f.edges.push_back(static_cast<int>(i));
  return f;
}

struct ScoredSpan {
  Span span;
  double score = 0.0;
};

// Repeatedly takes the best remaining span that shares no token with the
// ones already taken. Ties: earlier start, then shorter width, then input
// order. Returns positions into `candidates` in selection order.
inline std::vector<int> greedy_flat_decode(const std::vector<ScoredSpan> &candidates) {
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&candidates](int a, int b) {
    const auto &x = candidates[static_cast<std::size_t>(a)];
    const auto &y = candidates[static_cast<std::size_t>(b)];
    if (x.score != y.score) return x.score > y.score;
    if (x.span.start != y.span.start) return x.span.start < y.span.start;
    return x.span.width() < y.span.width();
  });
  std::vector<int> chosen;
  for (int i : order) {
    const Span &s = candidates[static_cast<std::size_t>(i)].span;
    bool clash = false;
    for (int c : chosen) clash = clash || s.overlaps(candidates[static_cast<std::size_t>(c)].span);
    if (!clash) chosen.push_back(i);
  }
  return chosen;
}

// Drops every edge with an endpoint outside `nodes`.
inline std::vector<int> enforce_consistency(const std::vector<int> &nodes, const std::vector<int> &edges,
                                            const std::vector<GraphEdge> &graph_edges) {
  std::vector<bool> kept;
  for (int n : nodes) {
    if (n >= static_cast<int>(kept.size())) kept.resize(static_cast<std::size_t>(n) + 1, false);
    kept[static_cast<std::size_t>(n)] = true;
  }
  auto in = [&kept](int n) { return n >= 0 && n < static_cast<int>(kept.size()) && kept[static_cast<std::size_t>(n)]; };
  std::vector<int> out;
  for (int e : edges) {
    const auto &ge = graph_edges[static_cast<std::size_t>(e)];
    if (in(ge.source) && in(ge.target)) out.push_back(e);
  }
  return out;
}

// Threshold, optional flat decoding, then the consistency filter. Node
// indices come back in ascending order.
inline FinalStructure decode_structure(const InitialGraph &g, const KeepProbabilities &p, bool flat,
                                       double threshold = 0.5) {
  FinalStructure f = threshold_structure(p, threshold);
  if (flat) {
    std::vector<ScoredSpan> cands;
    for (int n : f.nodes) {
      cands.push_back({g.node_spans[static_cast<std::size_t>(n)], p.node_keep[static_cast<std::size_t>(n)]});
    }
    std::vector<int> picked;
    for (int c : greedy_flat_decode(cands)) picked.push_back(f.nodes[static_cast<std::size_t>(c)]);
    std::sort(picked.begin(), picked.end());
    f.nodes = std::move(picked);
  }
  f.edges = enforce_consistency(f.nodes, f.edges, g.edges);
  return f;
}

}  // namespace spangraph

#endif  // SPANGRAPH_EDIT_DECODE_HPP_
