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

#ifndef SPANGRAPH_OPTIM_HPP_
#define SPANGRAPH_OPTIM_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "spangraph/nn.hpp"

namespace spangraph {

// Linear warmup from 0 to 1 over `warmup` steps, then linear decay to 0 at
// `total`. Steps count from 1.
inline double schedule_multiplier(long step, long warmup, long total) {
  if (step <= 0) return 0.0;
  if (warmup > 0 && step < warmup) return static_cast<double>(step) / static_cast<double>(warmup);
  if (total <= warmup) return 1.0;
  return std::max(0.0, static_cast<double>(total - step) / static_cast<double>(total - warmup));
}

// Scales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
inline double clip_grad_norm(nn::ParameterStore &store, double max_norm) {
  double sq = 0.0;
  for (auto &p : store.all())
    if (p.var.has_grad()) sq += p.var.grad_buffer().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (auto &p : store.all())
      if (p.var.has_grad()) p.var.grad_buffer() *= s;
  }
  return norm;
}

struct AdamWOptions {
  double lr_backbone = 3e-5;
  double lr_others = 5e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// AdamW with decoupled weight decay and one learning rate per parameter
// group. Parameters with requires_grad off are skipped.
class AdamW {
 public:
  AdamW(nn::ParameterStore &store, AdamWOptions opt) : store_(&store), opt_(opt) {
    for (const auto &p : store.all()) {
      m_.push_back(Matrix::Zero(p.var.rows(), p.var.cols()));
      v_.push_back(Matrix::Zero(p.var.rows(), p.var.cols()));
    }
  }

  long steps() const { return t_; }

  // One update with learning rates scaled by `multiplier`.
  void step(double multiplier) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    auto &params = store_->all();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto &p = params[i];
      if (!p.var.requires_grad() || !p.var.has_grad()) continue;
      const double lr =
          multiplier * (p.group == nn::Group::kBackbone ? opt_.lr_backbone : opt_.lr_others);
      Matrix &w = p.var.mutable_value();
      const Matrix &g = p.var.grad_buffer();
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g.cwiseProduct(g);
      w *= (1.0 - lr * opt_.weight_decay);
      w.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opt_.eps);
    }
  }

 private:
  nn::ParameterStore *store_;
  AdamWOptions opt_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace spangraph

#endif  // SPANGRAPH_OPTIM_HPP_
