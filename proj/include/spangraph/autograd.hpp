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

// Minimal reverse-mode automatic differentiation over dense
// row-major double matrices. Every op records its parents and a closure that
// pushes the output gradient into them; `backward` walks the resulting DAG in
// reverse topological order.

#ifndef SPANGRAPH_AUTOGRAD_HPP_
#define SPANGRAPH_AUTOGRAD_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "spangraph/error.hpp"

namespace spangraph::ag {

using Index = Eigen::Index;
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node &)> backward_fn;

  Matrix &grad_buffer() {
    if (!has_grad) {
      grad = Matrix::Zero(value.rows(), value.cols());
      has_grad = true;
    }
    return grad;
  }
};

namespace detail {
inline bool &grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

// Disables graph recording for the lifetime of the guard (inference).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) {
    detail::grad_mode() = false;
  }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_mode(); }

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  static Var leaf(Matrix value, bool requires_grad = true) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Matrix &value() const { return node_->value; }
  Matrix &mutable_value() { return node_->value; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  double item() const { return node_->value(0, 0); }

  bool has_grad() const { return node_->has_grad; }
  Matrix grad() const {
    if (node_->has_grad) return node_->grad;
    return Matrix::Zero(rows(), cols());
  }
  Matrix &grad_buffer() { return node_->grad_buffer(); }
  void zero_grad() {
    node_->grad.resize(0, 0);
    node_->has_grad = false;
  }

  const std::shared_ptr<Node> &node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

// Builds an op result. The closure is dropped when no parent needs a
// gradient or recording is disabled.
inline Var make_result(Matrix value, std::vector<Var> parents,
                       std::function<void(const Node &)> fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (!grad_enabled()) return Var(std::move(n));
  bool any = false;
  for (const auto &p : parents) any = any || p.requires_grad();
  if (!any) return Var(std::move(n));
  n->requires_grad = true;
  n->parents.reserve(parents.size());
  for (auto &p : parents) n->parents.push_back(p.node());
  n->backward_fn = std::move(fn);
  return Var(std::move(n));
}

inline void check_same_shape(const Var &a, const Var &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

inline Matrix &pgrad(const Node &n, std::size_t i) {
  return n.parents[i]->grad_buffer();
}
inline bool pneeds(const Node &n, std::size_t i) {
  return n.parents[i]->requires_grad;
}

}  // namespace detail

// Runs reverse accumulation from a scalar (1x1) root.
inline void backward(const Var &root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ValidationError("backward: root must be a 1x1 scalar");
  }
  if (!root.requires_grad()) return;

  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node *p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer().setOnes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward_fn && n->has_grad) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------- algebra

inline Var matmul(const Var &a, const Var &b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: inner dimensions differ (" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  Matrix out = a.value() * b.value();
  return detail::make_result(std::move(out), {a, b}, [](const Node &n) {
    const Matrix &A = n.parents[0]->value;
    const Matrix &B = n.parents[1]->value;
    if (detail::pneeds(n, 0)) detail::pgrad(n, 0).noalias() += n.grad * B.transpose();
    if (detail::pneeds(n, 1)) detail::pgrad(n, 1).noalias() += A.transpose() * n.grad;
  });
}

inline Var transpose(const Var &a) {
  Matrix out = a.value().transpose();
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    detail::pgrad(n, 0) += n.grad.transpose();
  });
}

inline Var add(const Var &a, const Var &b) {
  detail::check_same_shape(a, b, "add");
  Matrix out = a.value() + b.value();
  return detail::make_result(std::move(out), {a, b}, [](const Node &n) {
    if (detail::pneeds(n, 0)) detail::pgrad(n, 0) += n.grad;
    if (detail::pneeds(n, 1)) detail::pgrad(n, 1) += n.grad;
  });
}

inline Var sub(const Var &a, const Var &b) {
  detail::check_same_shape(a, b, "sub");
  Matrix out = a.value() - b.value();
  return detail::make_result(std::move(out), {a, b}, [](const Node &n) {
    if (detail::pneeds(n, 0)) detail::pgrad(n, 0) += n.grad;
    if (detail::pneeds(n, 1)) detail::pgrad(n, 1) -= n.grad;
  });
}

// Elementwise product.
inline Var mul(const Var &a, const Var &b) {
  detail::check_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return detail::make_result(std::move(out), {a, b}, [](const Node &n) {
    if (detail::pneeds(n, 0))
      detail::pgrad(n, 0) += n.grad.cwiseProduct(n.parents[1]->value);
    if (detail::pneeds(n, 1))
      detail::pgrad(n, 1) += n.grad.cwiseProduct(n.parents[0]->value);
  });
}

inline Var scale(const Var &a, double s) {
  Matrix out = a.value() * s;
  return detail::make_result(std::move(out), {a}, [s](const Node &n) {
    detail::pgrad(n, 0) += n.grad * s;
  });
}

// a (r x c) + row (1 x c), broadcast over rows.
inline Var add_row(const Var &a, const Var &row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ValidationError("add_row: expected 1x" + std::to_string(a.cols()) +
                          " row, got " + std::to_string(row.rows()) + "x" +
                          std::to_string(row.cols()));
  }
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return detail::make_result(std::move(out), {a, row}, [](const Node &n) {
    if (detail::pneeds(n, 0)) detail::pgrad(n, 0) += n.grad;
    if (detail::pneeds(n, 1)) detail::pgrad(n, 1) += n.grad.colwise().sum();
  });
}

// out(i, j) = f(i) + g(j) for column vectors f (n x 1) and g (m x 1).
inline Var outer_sum(const Var &f, const Var &g) {
  if (f.cols() != 1 || g.cols() != 1) {
    throw ValidationError("outer_sum: expected column vectors");
  }
  const Index n = f.rows(), m = g.rows();
  Matrix out(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) out(i, j) = f.value()(i, 0) + g.value()(j, 0);
  return detail::make_result(std::move(out), {f, g}, [](const Node &nd) {
    if (detail::pneeds(nd, 0)) detail::pgrad(nd, 0) += nd.grad.rowwise().sum();
    if (detail::pneeds(nd, 1))
      detail::pgrad(nd, 1) += nd.grad.colwise().sum().transpose();
  });
}

inline Var sum(const Var &a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    detail::pgrad(n, 0).array() += n.grad(0, 0);
  });
}

// --------------------------------------------------------- nonlinearities

inline Var relu(const Var &a) {
  Matrix out = a.value().cwiseMax(0.0);
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    const Matrix &x = n.parents[0]->value;
    detail::pgrad(n, 0) +=
        (x.array() > 0.0).select(n.grad, Matrix::Zero(x.rows(), x.cols()));
  });
}

inline Var leaky_relu(const Var &a, double slope) {
  Matrix out = a.value().unaryExpr(
      [slope](double x) { return x > 0.0 ? x : slope * x; });
  return detail::make_result(std::move(out), {a}, [slope](const Node &n) {
    const Matrix &x = n.parents[0]->value;
    detail::pgrad(n, 0) +=
        (x.array() > 0.0).select(n.grad, n.grad * slope);
  });
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(const Var &a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    const Matrix &y = n.value;
    detail::pgrad(n, 0).array() +=
        n.grad.array() * y.array() * (1.0 - y.array());
  });
}

inline Var tanh(const Var &a) {
  Matrix out = a.value().array().tanh().matrix();
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    const Matrix &y = n.value;
    detail::pgrad(n, 0).array() += n.grad.array() * (1.0 - y.array().square());
  });
}

// Row-wise softmax. Entries where `mask` is zero are excluded; a row with no
// admissible entry produces zeros.
inline Var masked_softmax_rows(const Var &a, const Matrix *mask) {
  const Matrix &x = a.value();
  if (mask && (mask->rows() != x.rows() || mask->cols() != x.cols())) {
    throw ValidationError("masked_softmax_rows: mask shape mismatch");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < x.cols(); ++j)
      if (!mask || (*mask)(i, j) != 0.0) mx = std::max(mx, x(i, j));
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      if (mask && (*mask)(i, j) == 0.0) continue;
      out(i, j) = std::exp(x(i, j) - mx);
      z += out(i, j);
    }
    out.row(i) /= z;
  }
  return detail::make_result(std::move(out), {a}, [](const Node &n) {
    const Matrix &y = n.value;
    Matrix &g = detail::pgrad(n, 0);
    for (Index i = 0; i < y.rows(); ++i) {
      const double dot = n.grad.row(i).dot(y.row(i));
      g.row(i).array() +=
          y.row(i).array() * (n.grad.row(i).array() - dot);
    }
  });
}

inline Var softmax_rows(const Var &a) { return masked_softmax_rows(a, nullptr); }

// Normalizes each row to zero mean / unit variance, then applies the
// per-column gain and bias (both 1 x c).
inline Var layer_norm_rows(const Var &x, const Var &gain, const Var &bias,
                           double eps = 1e-5) {
  const Index r = x.rows(), c = x.cols();
  if (gain.cols() != c || bias.cols() != c || gain.rows() != 1 ||
      bias.rows() != 1) {
    throw ValidationError("layer_norm_rows: gain/bias width mismatch");
  }
  Matrix xhat(r, c);
  std::vector<double> inv_std(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    const double mu = x.value().row(i).mean();
    const double var =
        (x.value().row(i).array() - mu).square().sum() / static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = is;
    xhat.row(i) = (x.value().row(i).array() - mu) * is;
  }
  Matrix out = xhat;
  for (Index i = 0; i < r; ++i) {
    out.row(i) = xhat.row(i).cwiseProduct(gain.value().row(0)) + bias.value().row(0);
  }
  return detail::make_result(
      std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std)](const Node &n) {
        const Matrix &gy = n.grad;
        const Matrix &gamma = n.parents[1]->value;
        if (detail::pneeds(n, 1))
          detail::pgrad(n, 1) += gy.cwiseProduct(xhat).colwise().sum();
        if (detail::pneeds(n, 2)) detail::pgrad(n, 2) += gy.colwise().sum();
        if (detail::pneeds(n, 0)) {
          Matrix &gx = detail::pgrad(n, 0);
          const double c = static_cast<double>(xhat.cols());
          for (Index i = 0; i < xhat.rows(); ++i) {
            Eigen::RowVectorXd dxhat = gy.row(i).cwiseProduct(gamma.row(0));
            const double m1 = dxhat.sum() / c;
            const double m2 = dxhat.dot(xhat.row(i)) / c;
            gx.row(i).array() += inv_std[static_cast<std::size_t>(i)] *
                                 (dxhat.array() - m1 - xhat.row(i).array() * m2);
          }
        }
      });
}

// ------------------------------------------------------------ reshaping

inline Var concat_cols(const std::vector<Var> &parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  const Index r = parts.front().rows();
  Index c = 0;
  for (const auto &p : parts) {
    if (p.rows() != r) throw ValidationError("concat_cols: row count mismatch");
    c += p.cols();
  }
  Matrix out(r, c);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto &p : parts) {
    offsets.push_back(off);
    if (r > 0 && p.cols() > 0) out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return detail::make_result(
      std::move(out), parts, [offsets = std::move(offsets)](const Node &n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          if (!detail::pneeds(n, k)) continue;
          const Index w = n.parents[k]->value.cols();
          detail::pgrad(n, k) += n.grad.middleCols(offsets[k], w);
        }
      });
}

inline Var concat_rows(const std::vector<Var> &parts) {
  if (parts.empty()) throw ValidationError("concat_rows: no inputs");
  const Index c = parts.front().cols();
  Index r = 0;
  for (const auto &p : parts) {
    if (p.cols() != c) throw ValidationError("concat_rows: column count mismatch");
    r += p.rows();
  }
  Matrix out(r, c);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto &p : parts) {
    offsets.push_back(off);
    if (p.rows() > 0 && c > 0) out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return detail::make_result(
      std::move(out), parts, [offsets = std::move(offsets)](const Node &n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          if (!detail::pneeds(n, k)) continue;
          const Index h = n.parents[k]->value.rows();
          detail::pgrad(n, k) += n.grad.middleRows(offsets[k], h);
        }
      });
}

inline Var slice_cols(const Var &a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ValidationError("slice_cols: range out of bounds");
  }
  Matrix out = a.value().middleCols(start, count);
  return detail::make_result(std::move(out), {a}, [start, count](const Node &n) {
    detail::pgrad(n, 0).middleCols(start, count) += n.grad;
  });
}

inline Var slice_rows(const Var &a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ValidationError("slice_rows: range out of bounds");
  }
  Matrix out = a.value().middleRows(start, count);
  return detail::make_result(std::move(out), {a}, [start, count](const Node &n) {
    detail::pgrad(n, 0).middleRows(start, count) += n.grad;
  });
}

// out.row(i) = a.row(index[i]); repeated indices accumulate on the way back.
inline Var gather_rows(const Var &a, std::span<const Index> index) {
  Matrix out(static_cast<Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) {
      throw ValidationError("gather_rows: index " + std::to_string(index[i]) +
                            " out of range for " + std::to_string(a.rows()) +
                            " rows");
    }
    out.row(static_cast<Index>(i)) = a.value().row(index[i]);
  }
  std::vector<Index> idx(index.begin(), index.end());
  return detail::make_result(std::move(out), {a}, [idx = std::move(idx)](const Node &n) {
    Matrix &g = detail::pgrad(n, 0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
  });
}

// Inverted dropout. `rng` is only consulted when `active` and p > 0.
inline Var dropout(const Var &a, double p, std::mt19937_64 *rng, bool active) {
  if (!active || p <= 0.0 || rng == nullptr) return a;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? s : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  return detail::make_result(std::move(out), {a}, [mask = std::move(mask)](const Node &n) {
    detail::pgrad(n, 0) += n.grad.cwiseProduct(mask);
  });
}

// ---------------------------------------------------------------- losses

// Sum over rows of BCE(target, sigmoid(logit)), evaluated in logit space.
inline Var bce_with_logits_sum(const Var &logits, std::span<const double> targets) {
  if (logits.cols() != 1 || static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw ValidationError("bce_with_logits_sum: expected n x 1 logits matching targets");
  }
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const double x = logits.value()(i, 0);
    const double t = targets[static_cast<std::size_t>(i)];
    total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<double> tg(targets.begin(), targets.end());
  return detail::make_result(std::move(out), {logits}, [tg = std::move(tg)](const Node &n) {
    Matrix &g = detail::pgrad(n, 0);
    const Matrix &x = n.parents[0]->value;
    const double s = n.grad(0, 0);
    for (Index i = 0; i < x.rows(); ++i)
      g(i, 0) += s * (stable_sigmoid(x(i, 0)) - tg[static_cast<std::size_t>(i)]);
  });
}

// Sum over rows of -log softmax(row)[label].
inline Var cross_entropy_sum(const Var &logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ValidationError("cross_entropy_sum: label count mismatch");
  }
  const Matrix &x = logits.value();
  Matrix probs(x.rows(), x.cols());
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= x.cols()) throw ValidationError("cross_entropy_sum: label out of range");
    const double mx = x.row(i).maxCoeff();
    const double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    probs.row(i) = (x.row(i).array() - lse).exp();
    total += lse - x(i, l);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> lb(labels.begin(), labels.end());
  return detail::make_result(
      std::move(out), {logits},
      [probs = std::move(probs), lb = std::move(lb)](const Node &n) {
        Matrix &g = detail::pgrad(n, 0);
        const double s = n.grad(0, 0);
        for (Index i = 0; i < probs.rows(); ++i) {
          g.row(i) += s * probs.row(i);
          g(i, lb[static_cast<std::size_t>(i)]) -= s;
        }
      });
}

inline bool all_finite(const Matrix &m) { return m.allFinite(); }

}  // namespace spangraph::ag

#endif  // SPANGRAPH_AUTOGRAD_HPP_
