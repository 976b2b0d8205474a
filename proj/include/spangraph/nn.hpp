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

#ifndef SPANGRAPH_NN_HPP_
#define SPANGRAPH_NN_HPP_

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "spangraph/autograd.hpp"

namespace spangraph::nn {

using ag::Index;
using ag::Matrix;
using ag::Var;

// Parameter groups get separate learning rates in the optimizer.
enum class Group { kBackbone, kOthers };

struct Parameter {
  std::string name;
  Var var;
  Group group = Group::kOthers;
};

// Owns every trainable tensor of a model, keyed by module path
// ("encoder.embed", "gt.layer0.attn.wq", ...). Insertion order is kept so
// that serialization and optimizer state are reproducible.
class ParameterStore {
 public:
  Var add(const std::string &name, Matrix init, Group group = Group::kOthers) {
    if (index_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
    index_[name] = params_.size();
    params_.push_back({name, Var::leaf(std::move(init), true), group});
    return params_.back().var;
  }

  Var get(const std::string &name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return params_[it->second].var;
  }

  bool contains(const std::string &name) const { return index_.count(name) != 0; }

  std::vector<Parameter> &all() { return params_; }
  const std::vector<Parameter> &all() const { return params_; }

  void zero_grad() {
    for (auto &p : params_) p.var.zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto &p : params_) n += static_cast<std::size_t>(p.var.value().size());
    return n;
  }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

inline Matrix xavier_uniform(Index rows, Index cols, std::mt19937_64 &rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline Matrix normal_matrix(Index rows, Index cols, double stddev,
                            std::mt19937_64 &rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Per-call forward state: dropout is active only when training.
struct Context {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64 *rng = nullptr;

  Var drop(const Var &x) const { return ag::dropout(x, dropout, rng, training); }
};

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out, undefined when bias-free

  Linear() = default;
  Linear(ParameterStore &store, const std::string &name, Index in, Index out,
         std::mt19937_64 &rng, bool with_bias = true, Group group = Group::kOthers) {
    weight = store.add(name + ".weight", xavier_uniform(in, out, rng), group);
    if (with_bias) bias = store.add(name + ".bias", Matrix::Zero(1, out), group);
  }

  Var operator()(const Var &x) const {
    Var y = ag::matmul(x, weight);
    return bias.defined() ? ag::add_row(y, bias) : y;
  }
};

// Two-layer feed-forward network: in -> hidden -> out with a rectifier and
// dropout between the layers.
struct FeedForward {
  Linear first;
  Linear second;

  FeedForward() = default;
  FeedForward(ParameterStore &store, const std::string &name, Index in,
              Index hidden, Index out, std::mt19937_64 &rng,
              Group group = Group::kOthers)
      : first(store, name + ".0", in, hidden, rng, true, group),
        second(store, name + ".1", hidden, out, rng, true, group) {}

  Var operator()(const Var &x, const Context &ctx) const {
    return second(ctx.drop(ag::relu(first(x))));
  }
};

struct LayerNorm {
  Var gain;
  Var bias;

  LayerNorm() = default;
  LayerNorm(ParameterStore &store, const std::string &name, Index width,
            Group group = Group::kOthers) {
    gain = store.add(name + ".gain", Matrix::Ones(1, width), group);
    bias = store.add(name + ".bias", Matrix::Zero(1, width), group);
  }

  Var operator()(const Var &x) const { return ag::layer_norm_rows(x, gain, bias); }
};

// Multi-head scaled dot-product self-attention without positional terms.
struct MultiHeadAttention {
  Linear query, key, value, output;
  Index heads = 1;
  Index width = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore &store, const std::string &name, Index d,
                     Index num_heads, std::mt19937_64 &rng,
                     Group group = Group::kOthers)
      : query(store, name + ".wq", d, d, rng, true, group),
        key(store, name + ".wk", d, d, rng, true, group),
        value(store, name + ".wv", d, d, rng, true, group),
        output(store, name + ".wo", d, d, rng, true, group),
        heads(num_heads),
        width(d) {
    if (num_heads < 1 || d % num_heads != 0) {
      throw ConfigError("attention width " + std::to_string(d) +
                        " is not divisible by " + std::to_string(num_heads) +
                        " heads");
    }
  }

  // `capture`, when given, receives one (n x n) weight matrix per head.
  Var operator()(const Var &x, const Context &ctx,
                 std::vector<Matrix> *capture = nullptr) const {
    const Index dh = width / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    Var q = query(x), k = key(x), v = value(x);
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      Var qh = ag::slice_cols(q, h * dh, dh);
      Var kh = ag::slice_cols(k, h * dh, dh);
      Var vh = ag::slice_cols(v, h * dh, dh);
      Var weights = ag::softmax_rows(ag::scale(ag::matmul(qh, ag::transpose(kh)), inv));
      if (capture) capture->push_back(weights.value());
      outs.push_back(ag::matmul(ctx.drop(weights), vh));
    }
    return output(heads == 1 ? outs.front() : ag::concat_cols(outs));
  }
};

// Pre-normalization transformer block: x + Attn(LN(x)), then x + FFN(LN(x)).
struct TransformerBlock {
  LayerNorm norm_attn;
  MultiHeadAttention attn;
  LayerNorm norm_ffn;
  FeedForward ffn;

  TransformerBlock() = default;
  TransformerBlock(ParameterStore &store, const std::string &name, Index d,
                   Index heads, Index ffn_width, std::mt19937_64 &rng,
                   Group group = Group::kOthers)
      : norm_attn(store, name + ".ln_attn", d, group),
        attn(store, name + ".attn", d, heads, rng, group),
        norm_ffn(store, name + ".ln_ffn", d, group),
        ffn(store, name + ".ffn", d, ffn_width, d, rng, group) {}

  Var operator()(const Var &x, const Context &ctx,
                 std::vector<Matrix> *capture = nullptr) const {
    Var h = ag::add(x, ctx.drop(attn(norm_attn(x), ctx, capture)));
    return ag::add(h, ctx.drop(ffn(norm_ffn(h), ctx)));
  }
};

}  // namespace spangraph::nn

#endif  // SPANGRAPH_NN_HPP_
