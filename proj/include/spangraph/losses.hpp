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

// The four training objectives. Each is an unweighted sum of per-element
// binary or categorical cross-entropies; the total is their plain sum.

#ifndef SPANGRAPH_LOSSES_HPP_
#define SPANGRAPH_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "spangraph/autograd.hpp"

namespace spangraph {

using ag::Matrix;
using ag::Var;
using ag::Index;

// BCE(p, q) = -(p log q + (1 - p) log(1 - q)) for q in (0, 1).
inline double bce(double target, double prob) {
  return -(target * std::log(prob) + (1.0 - target) * std::log(1.0 - prob));
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (out[i] = std::exp(logits[i] - mx));
  for (auto &v : out) v /= z;
  return out;
}

// CE(l, y) = -log softmax(y)[l], via log-sum-exp.
inline double ce(int label, std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return mx + std::log(z) - logits[static_cast<std::size_t>(label)];
}

struct LossBreakdown {
  Var node_select;
  Var edge_select;
  Var edit;
  Var cls;
  Var total;

  double l_v() const { return node_select.item(); }
  double l_e() const { return edge_select.item(); }
  double l_edit() const { return edit.item(); }
  double l_cls() const { return cls.item(); }
  double l_total() const { return total.item(); }
};

inline Var zero_scalar() { return Var::constant(Matrix::Zero(1, 1)); }

// Sum over all candidate spans of BCE(delta_n, sigma(selection logit)).
inline Var loss_node_select(const Var &span_logits, std::span<const double> indicator) {
  return ag::bce_with_logits_sum(span_logits, indicator);
}

// Sum over ordered pairs of selected nodes of BCE(delta_nm, sigma(raw score)).
inline Var loss_edge_select(const Var &pair_scores, std::span<const double> indicator) {
  if (pair_scores.rows() == 0) return zero_scalar();
  return ag::bce_with_logits_sum(pair_scores, indicator);
}

// Node-level plus edge-level keep BCE over the initial graph. `keep_logits`
// stacks nodes first, then edges, matching `indicator`.
inline Var loss_edit(const Var &keep_logits, std::span<const double> indicator) {
  if (keep_logits.rows() == 0) return zero_scalar();
  return ag::bce_with_logits_sum(keep_logits, indicator);
}

// Categorical cross-entropy over the rows listed in `node_rows` /
// `edge_rows` (the configured domain).
inline Var loss_cls(const Var &node_logits, std::span<const int> node_labels,
                    const std::vector<Index> &node_rows, const Var &edge_logits,
                    std::span<const int> edge_labels, const std::vector<Index> &edge_rows) {
  Var total = zero_scalar();
  if (!node_rows.empty()) {
    std::vector<int> labels;
    for (Index r : node_rows) labels.push_back(node_labels[static_cast<std::size_t>(r)]);
    total = ag::add(total, ag::cross_entropy_sum(ag::gather_rows(node_logits, node_rows), labels));
  }
  if (!edge_rows.empty()) {
    std::vector<int> labels;
    for (Index r : edge_rows) labels.push_back(edge_labels[static_cast<std::size_t>(r)]);
    total = ag::add(total, ag::cross_entropy_sum(ag::gather_rows(edge_logits, edge_rows), labels));
  }
  return total;
}

inline LossBreakdown combine_losses(Var l_v, Var l_e, Var l_edit, Var l_cls) {
  LossBreakdown b{std::move(l_v), std::move(l_e), std::move(l_edit), std::move(l_cls), {}};
  b.total = ag::add(ag::add(ag::add(b.node_select, b.edge_select), b.edit), b.cls);
  return b;
}

}  // namespace spangraph

#endif  // SPANGRAPH_LOSSES_HPP_
