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


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spangraph/autograd.hpp"
#include "test_util.hpp"

namespace spangraph {
namespace {

using ag::Index;
using ag::Matrix;
using ag::Var;
using testing::check_gradients;
using testing::random_matrix;
using testing::weighted_sum;

constexpr double kTol = 1e-4;

class OpGradients : public ::testing::Test {
 protected:
  std::mt19937_64 rng{7};
  Var leaf(Index r, Index c, double scale = 1.0) { return Var::leaf(random_matrix(r, c, rng, scale)); }
};

TEST_F(OpGradients, MatmulTransposeAddSub) {
  Var a = leaf(3, 4), b = leaf(4, 2), c = leaf(3, 2);
  auto g = check_gradients({{"a", a}, {"b", b}, {"c", c}}, [&] {
    return weighted_sum(ag::sub(ag::add(ag::matmul(a, b), c), ag::transpose(ag::matmul(ag::transpose(b), ag::transpose(a)))));
  });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
  auto g2 = check_gradients({{"a", a}, {"b", b}}, [&] { return weighted_sum(ag::matmul(a, b)); });
  EXPECT_LT(g2.max_rel_error, kTol) << g2.worst;
}

TEST_F(OpGradients, ElementwiseAndBroadcast) {
  Var a = leaf(3, 4), b = leaf(3, 4), row = leaf(1, 4), f = leaf(3, 1), h = leaf(5, 1);
  auto g = check_gradients({{"a", a}, {"b", b}, {"row", row}}, [&] {
    return weighted_sum(ag::add_row(ag::scale(ag::mul(a, b), 0.7), row));
  });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
  auto g2 = check_gradients({{"f", f}, {"h", h}}, [&] { return weighted_sum(ag::outer_sum(f, h)); });
  EXPECT_LT(g2.max_rel_error, kTol) << g2.worst;
}

TEST_F(OpGradients, Nonlinearities) {
  // Keep entries away from the relu kink so central differences are valid.
  Matrix m = random_matrix(4, 5, rng);
  for (Index i = 0; i < m.size(); ++i)
    if (std::abs(m.data()[i]) < 0.05) m.data()[i] += 0.2;
  Var a = Var::leaf(m);
  for (auto fn : {+[](const Var &x) { return ag::relu(x); }, +[](const Var &x) { return ag::leaky_relu(x, 0.2); },
                  +[](const Var &x) { return ag::sigmoid(x); }, +[](const Var &x) { return ag::tanh(x); }}) {
    auto g = check_gradients({{"a", a}}, [&] { return weighted_sum(fn(a)); });
    EXPECT_LT(g.max_rel_error, kTol) << g.worst;
  }
}

TEST_F(OpGradients, SoftmaxAndMaskedSoftmax) {
  Var a = leaf(4, 4);
  Matrix mask = Matrix::Ones(4, 4);
  mask(0, 1) = mask(2, 3) = 0.0;
  mask.row(3).setZero();
  auto g = check_gradients({{"a", a}}, [&] { return weighted_sum(ag::softmax_rows(a)); });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
  auto g2 = check_gradients({{"a", a}}, [&] { return weighted_sum(ag::masked_softmax_rows(a, &mask)); });
  EXPECT_LT(g2.max_rel_error, kTol) << g2.worst;
}

TEST_F(OpGradients, LayerNorm) {
  Var x = leaf(3, 6), gain = leaf(1, 6), bias = leaf(1, 6);
  auto g = check_gradients({{"x", x}, {"gain", gain}, {"bias", bias}},
                           [&] { return weighted_sum(ag::layer_norm_rows(x, gain, bias)); });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
}

TEST_F(OpGradients, ConcatSliceGather) {
  Var a = leaf(3, 2), b = leaf(3, 3), c = leaf(2, 5);
  const std::vector<Index> idx{2, 0, 2, 1};
  auto g = check_gradients({{"a", a}, {"b", b}, {"c", c}}, [&] {
    Var wide = ag::concat_cols({a, b});
    Var tall = ag::concat_rows({wide, c});
    return ag::add(weighted_sum(ag::gather_rows(tall, idx)),
                   weighted_sum(ag::slice_rows(ag::slice_cols(tall, 1, 3), 1, 3), 3));
  });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
}

TEST_F(OpGradients, Losses) {
  Var logits = leaf(5, 1, 2.0), cls = leaf(4, 3);
  const std::vector<double> targets{1, 0, 1, 0.3, 0};
  const std::vector<int> labels{0, 2, 1, 2};
  auto g = check_gradients({{"logits", logits}}, [&] { return ag::bce_with_logits_sum(logits, targets); });
  EXPECT_LT(g.max_rel_error, kTol) << g.worst;
  auto g2 = check_gradients({{"cls", cls}}, [&] { return ag::cross_entropy_sum(cls, labels); });
  EXPECT_LT(g2.max_rel_error, kTol) << g2.worst;
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Var x = Var::leaf(Matrix::Constant(1, 1, 3.0));
  Var y = ag::mul(x, x);               // x^2
  Var z = ag::add(ag::mul(y, x), y);   // x^3 + x^2
  ag::backward(z);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 3 * 9.0 + 2 * 3.0);
}

TEST(Autograd, NoGradGuardRecordsNothing) {
  Var x = Var::leaf(Matrix::Ones(2, 2));
  ag::NoGradGuard g;
  Var y = ag::sum(ag::mul(x, x));
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autograd, BackwardNeedsScalar) {
  Var x = Var::leaf(Matrix::Ones(2, 2));
  EXPECT_THROW(ag::backward(x), ValidationError);
}

TEST(Autograd, ShapeMismatchIsReported) {
  Var a = Var::leaf(Matrix::Ones(2, 3)), b = Var::leaf(Matrix::Ones(2, 3));
  EXPECT_THROW(ag::matmul(a, b), ValidationError);
  EXPECT_THROW(ag::add(a, ag::transpose(b)), ValidationError);
}

TEST(Autograd, SoftmaxRowsSumToOneAndMaskedRowsAreZero) {
  std::mt19937_64 rng(3);
  Matrix mask = Matrix::Ones(3, 4);
  mask.row(1).setZero();
  mask(2, 0) = 0.0;
  const Matrix p = ag::masked_softmax_rows(Var::constant(random_matrix(3, 4, rng, 10.0)), &mask).value();
  EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-12);
  EXPECT_EQ(p.row(1).sum(), 0.0);
  EXPECT_NEAR(p.row(2).sum(), 1.0, 1e-12);
  EXPECT_EQ(p(2, 0), 0.0);
}

TEST(Autograd, StableSigmoidExtremes) {
  EXPECT_NEAR(ag::stable_sigmoid(1.0), 0.7310585786, 1e-10);
  EXPECT_EQ(ag::stable_sigmoid(-1000.0), 0.0);
  EXPECT_EQ(ag::stable_sigmoid(1000.0), 1.0);
  const std::vector<double> t{1.0};
  EXPECT_TRUE(std::isfinite(ag::bce_with_logits_sum(Var::constant(Matrix::Constant(1, 1, -800.0)), t).item()));
}

TEST(Autograd, DropoutIsInvertedAndIdleInEval) {
  std::mt19937_64 rng(1);
  Var x = Var::constant(Matrix::Ones(200, 50));
  EXPECT_EQ(ag::dropout(x, 0.5, &rng, false).value(), x.value());
  const Matrix y = ag::dropout(x, 0.5, &rng, true).value();
  EXPECT_NEAR(y.mean(), 1.0, 0.05);
  for (Index i = 0; i < y.size(); ++i) EXPECT_TRUE(y.data()[i] == 0.0 || y.data()[i] == 2.0);
}

}  // namespace
}  // namespace spangraph
