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

// Candidate graph construction: score every span, keep the top-K as nodes,
// score every ordered pair of distinct nodes, keep the top-K as edges.

#ifndef SPANGRAPH_GRAPH_BUILDER_HPP_
#define SPANGRAPH_GRAPH_BUILDER_HPP_

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spangraph/corpus.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

using ag::Index;
using ag::Matrix;
using ag::Var;

struct GraphEdge {
  int source = 0;  // index into InitialGraph::nodes
  int target = 0;
  bool operator==(const GraphEdge &) const = default;
  auto operator<=>(const GraphEdge &) const = default;
};

struct InitialGraph {
  std::vector<int> node_span_index;  // rows of the span matrix, rank order
  std::vector<Span> node_spans;
  std::vector<double> node_scores;   // sigmoid selection scores
  std::vector<GraphEdge> edges;      // rank order
  std::vector<double> edge_scores;   // raw logits

  int num_nodes() const { return static_cast<int>(node_spans.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
};

// Indices of the min(k, n) largest scores, best first. Equal scores keep
// input order; spans are enumerated by (start, end), so for nodes this is
// the earlier-start-then-shorter-width rule.
inline std::vector<int> select_top_k(std::span<const double> scores, int k) {
  if (k < 1) throw ValidationError("select_top_k: K must be >= 1");
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&scores](int a, int b) {
                      const double sa = scores[static_cast<std::size_t>(a)];
                      const double sb = scores[static_cast<std::size_t>(b)];
                      if (sa != sb) return sa > sb;
                      return a < b;
                    });
  idx.resize(take);
  return idx;
}

// Ordered pairs (i, j), i != j, over n nodes in row-major order.
inline std::vector<GraphEdge> ordered_pairs(int n) {
  std::vector<GraphEdge> out;
  if (n < 2) return out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) out.push_back({i, j});
  return out;
}

// sigma(w_n . s) per span. No bias term.
class NodeSelector {
 public:
  NodeSelector() = default;
  NodeSelector(nn::ParameterStore &store, Index width, std::mt19937_64 &rng)
      : weight_(store.add("graph.node_weight", nn::xavier_uniform(width, 1, rng))) {}
  explicit NodeSelector(Var weight) : weight_(std::move(weight)) {}

  const Var &weight() const { return weight_; }

  // Logits w_n . s (n x 1); the selection score is their sigmoid.
  Var logits(const Var &spans) const { return ag::matmul(spans, weight_); }
  Var scores(const Var &spans) const { return ag::sigmoid(logits(spans)); }

 private:
  Var weight_;
};

// w_e . [s_source ; s_target] per ordered pair. Raw scores, no sigmoid.
class EdgeSelector {
 public:
  EdgeSelector() = default;
  EdgeSelector(nn::ParameterStore &store, Index width, std::mt19937_64 &rng)
      : weight_(store.add("graph.edge_weight", nn::xavier_uniform(2 * width, 1, rng))) {}
  explicit EdgeSelector(Var weight) : weight_(std::move(weight)) {}

  const Var &weight() const { return weight_; }

  Var scores(const Var &node_reps, const std::vector<GraphEdge> &pairs) const {
    if (pairs.empty()) return Var::constant(Matrix(0, 1));
    std::vector<Index> src, tgt;
    src.reserve(pairs.size());
    tgt.reserve(pairs.size());
    for (const auto &p : pairs) {
      src.push_back(p.source);
      tgt.push_back(p.target);
    }
    Var cat = ag::concat_cols({ag::gather_rows(node_reps, src), ag::gather_rows(node_reps, tgt)});
    return ag::matmul(cat, weight_);
  }

 private:
  Var weight_;
};

inline std::vector<double> column(const Matrix &m) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, 0);
  return v;
}

// Makes sure every index in `required` is selected, evicting the
// lowest-ranked non-required entries. Size never exceeds `k`.
inline std::vector<int> inject_required(std::vector<int> selected, const std::vector<int> &required,
                                        std::span<const double> scores, int k) {
  std::vector<int> must;
  for (int r : required)
    if (std::find(selected.begin(), selected.end(), r) == selected.end()) must.push_back(r);
  if (must.empty()) return selected;
  // Required entries in score order so truncation keeps the best.
  auto req_sorted = required;
  std::stable_sort(req_sorted.begin(), req_sorted.end(), [&scores](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  std::vector<int> keep_req, others;
  for (int s : selected) {
    if (std::find(required.begin(), required.end(), s) == required.end()) others.push_back(s);
  }
  for (int r : req_sorted)
    if (static_cast<int>(keep_req.size()) < k) keep_req.push_back(r);
  std::vector<int> out = keep_req;
  for (int o : others)
    if (static_cast<int>(out.size()) < k) out.push_back(o);
  std::stable_sort(out.begin(), out.end(), [&scores](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return out;
}

// Indices chosen by a previous pass; replaying them makes the composed
// forward a smooth function of the parameters (used by gradient checks).
struct GraphSelection {
  std::vector<int> nodes;        // span indices, rank order
  std::vector<GraphEdge> edges;  // node-rank pairs, rank order
};

struct BuiltGraph {
  InitialGraph graph;
  Var span_logits;                   // |S| x 1 node-selection logits
  Var node_reps;                     // |V| x D rows of the span matrix
  std::vector<GraphEdge> pairs;      // every ordered pair over V
  Var pair_scores;                   // |V|(|V|-1) x 1 raw edge scores
  std::vector<int> edge_pair_index;  // edges -> rows of `pairs`
};

struct BuildOptions {
  int k_nodes = 1;
  int k_edges = 1;
  const std::vector<int> *required_nodes = nullptr;      // span indices
  const GraphSelection *frozen = nullptr;
};

// score_nodes -> top-K nodes -> score_edges -> top-K edges.
// `required_edge_fn`, when set, maps the chosen node list to the ordered
// pairs that must be kept (gold edges among selected nodes).
inline BuiltGraph build_initial_graph(
    const std::vector<Span> &spans, const Var &span_reps, const NodeSelector &node_sel,
    const EdgeSelector &edge_sel, const BuildOptions &opt,
    const std::function<std::vector<int>(const std::vector<Span> &, const std::vector<GraphEdge> &)>
        &required_edge_fn = {}) {
  if (static_cast<Index>(spans.size()) != span_reps.rows()) {
    throw ValidationError("build_initial_graph: span list and span matrix disagree");
  }
  BuiltGraph out;
  out.span_logits = node_sel.logits(span_reps);
  std::vector<double> probs = column(out.span_logits.value());
  for (auto &p : probs) p = ag::stable_sigmoid(p);

  std::vector<int> nodes;
  if (opt.frozen) {
    nodes = opt.frozen->nodes;
  } else {
    nodes = select_top_k(probs, opt.k_nodes);
    if (opt.required_nodes) nodes = inject_required(nodes, *opt.required_nodes, probs, opt.k_nodes);
  }
  auto &g = out.graph;
  g.node_span_index = nodes;
  std::vector<Index> rows;
  for (int n : nodes) {
    if (n < 0 || n >= static_cast<int>(spans.size())) throw ValidationError("frozen node index out of range");
    g.node_spans.push_back(spans[static_cast<std::size_t>(n)]);
    g.node_scores.push_back(probs[static_cast<std::size_t>(n)]);
    rows.push_back(n);
  }
  out.node_reps = ag::gather_rows(span_reps, rows);

  out.pairs = ordered_pairs(g.num_nodes());
  out.pair_scores = edge_sel.scores(out.node_reps, out.pairs);
  const std::vector<double> pair_scores = column(out.pair_scores.value());
  std::vector<int> chosen;
  if (opt.frozen) {
    for (const auto &e : opt.frozen->edges) {
      auto it = std::find(out.pairs.begin(), out.pairs.end(), e);
      if (it == out.pairs.end()) throw ValidationError("frozen edge is not a valid ordered pair");
      chosen.push_back(static_cast<int>(it - out.pairs.begin()));
    }
  } else if (!out.pairs.empty()) {
    chosen = select_top_k(pair_scores, opt.k_edges);
    if (required_edge_fn) {
      chosen = inject_required(chosen, required_edge_fn(g.node_spans, out.pairs), pair_scores,
                               opt.k_edges);
    }
  }
  for (int c : chosen) {
    g.edges.push_back(out.pairs[static_cast<std::size_t>(c)]);
    g.edge_scores.push_back(pair_scores[static_cast<std::size_t>(c)]);
  }
  out.edge_pair_index = std::move(chosen);
  return out;
}

inline GraphSelection selection_of(const InitialGraph &g) { return {g.node_span_index, g.edges}; }

inline nlohmann::ordered_json graph_to_json(const InitialGraph &g, const Sentence &s) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (int i = 0; i < g.num_nodes(); ++i) {
    const auto &sp = g.node_spans[static_cast<std::size_t>(i)];
    std::string text;
    for (int t = sp.start; t <= sp.end; ++t) text += (t > sp.start ? " " : "") + s.tokens[static_cast<std::size_t>(t)];
    j["nodes"].push_back({{"id", i}, {"span", {sp.start, sp.end}}, {"text", text},
                          {"score", g.node_scores[static_cast<std::size_t>(i)]}});
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto &ed = g.edges[static_cast<std::size_t>(e)];
    j["edges"].push_back({{"source", ed.source}, {"target", ed.target},
                          {"score", g.edge_scores[static_cast<std::size_t>(e)]}});
  }
  return j;
}

}  // namespace spangraph

#endif  // SPANGRAPH_GRAPH_BUILDER_HPP_
