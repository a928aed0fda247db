// Copyright 2026 The pbp Authors. All Rights Reserved.
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
#include "pbp/autograd.h"

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pbp/error.h"
#include "test_util.h"

namespace pbp::nn {
namespace {

using testing::CheckGradients;
using testing::RandomMatrix;

TEST(AutogradTest, MatMulValueAndGradient) {
  ParameterStore store;
  Parameter& a = store.Add("a", Matrix{{1, 2}, {3, 4}});
  Parameter& b = store.Add("b", Matrix{{5}, {6}});
  Graph g;
  Expr y = Sum(MatMul(g.Param(a), g.Param(b)));
  EXPECT_DOUBLE_EQ(y.value()(0, 0), 17 + 39);
  g.Backward(y);
  EXPECT_EQ(a.grad, (Matrix{{5, 6}, {5, 6}}));
  EXPECT_EQ(b.grad, (Matrix{{4}, {6}}));
}

TEST(AutogradTest, ConstantsReceiveNoGradient) {
  ParameterStore store;
  Parameter& w = store.Add("w", Matrix{{2.0}});
  Graph g;
  Expr x = g.Constant(Matrix{{3.0}});
  Expr y = Sum(Mul(g.Param(w), x));
  g.Backward(y);
  EXPECT_DOUBLE_EQ(w.grad(0, 0), 3.0);
}

TEST(AutogradTest, FrozenParameterHasNoGradBuffer) {
  ParameterStore store;
  Parameter& w = store.Add("w", Matrix{{2.0}}, /*trainable=*/false);
  Parameter& v = store.Add("v", Matrix{{1.0}});
  Graph g;
  g.Backward(Sum(Mul(g.Param(w), g.Param(v))));
  EXPECT_TRUE(w.grad.empty());
  EXPECT_DOUBLE_EQ(v.grad(0, 0), 2.0);
}

TEST(AutogradTest, BackwardRequiresScalarRoot) {
  Graph g;
  Expr x = g.Constant(Matrix(2, 2));
  EXPECT_THROW(g.Backward(x), ShapeError);
}

// Every op in one composite expression, checked against central differences.
TEST(AutogradTest, CompositeGraphMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  ParameterStore store;
  Parameter& x = store.Add("x", RandomMatrix(5, 4, rng));
  Parameter& w = store.Add("w", RandomMatrix(4, 6, rng, 0.5));
  Parameter& wt = store.Add("wt", RandomMatrix(6, 6, rng, 0.5));
  Parameter& bias = store.Add("bias", RandomMatrix(1, 6, rng));
  Parameter& gamma = store.Add("gamma", RandomMatrix(1, 6, rng));
  Parameter& beta = store.Add("beta", RandomMatrix(1, 6, rng));
  Parameter& table = store.Add("table", RandomMatrix(7, 6, rng));
  Parameter& mixw = store.Add("mixw", RandomMatrix(1, 3, rng));
  Parameter& mixg = store.Add("mixg", Matrix{{1.3}});
  Parameter& head = store.Add("head", RandomMatrix(12, 1, rng));

  const std::vector<int> ids{3, -1, 6, 0, 3};
  const std::vector<Span> spans{{0, 2}, {2, 3}, {3, 5}};
  const std::vector<RowRef> refs{{0, 1}, {-1, 0}, {1, 0}, {0, 2}};
  const std::vector<Scalar> mask{1.0, 0.0, 1.0, 0.5};
  const std::vector<Scalar> targets{1.0, 0.0, 1.0, 0.0};
  const std::vector<Scalar> weights{1.0, 2.0, 0.0, 1.0};

  auto loss = [&](Graph& g) {
    Expr h = AddRow(MatMul(g.Param(x), g.Param(w)), g.Param(bias));  // 5x6
    Expr ln = LayerNorm(h, g.Param(gamma), g.Param(beta), 1e-5);
    Expr att = SoftmaxRows(MatMulNT(ln, MatMulNT(h, g.Param(wt))));  // 5x5
    Expr ctx = MatMul(att, Gelu(ln));                               // 5x6
    Expr emb = Lookup(g.Param(table), ids);                         // 5x6
    Expr l1 = Tanh(Add(ctx, emb));
    Expr l2 = Sigmoid(Mul(ctx, emb));
    Expr l3 = Scale(ln, 0.7);
    Expr layers[] = {l1, l2, l3};
    Expr mixed = ScalarMix(layers, g.Param(mixw), g.Param(mixg));  // 5x6
    Expr pooled = SpanMean(mixed, spans);                             // 3x6
    Expr top = SliceRows(mixed, 1, 3);                                // 3x6
    Expr srcs[] = {pooled, top};
    Expr gathered = GatherRows(srcs, refs);                           // 4x6
    Expr other = SliceCols(ConcatCols(std::vector<Expr>{gathered, gathered}), 3, 6);
    Expr blended = Blend(mask, gathered, other);                      // 4x6
    Expr both = ConcatCols(std::vector<Expr>{blended, other});        // 4x12
    Expr stacked = ConcatRows(std::vector<Expr>{both, both});         // 8x12
    Expr logits = SliceRows(MatMul(stacked, g.Param(head)), 2, 4);    // 4x1
    return BinaryCrossEntropy(Sigmoid(logits), targets, weights);
  };
  auto result = CheckGradients(store, loss);
  EXPECT_GT(result.entries_checked, 100u);
  EXPECT_LT(result.worst_relative_error, 1e-5) << result.worst_entry;
}

TEST(AutogradTest, BinaryCrossEntropyAtHalfIsLn2) {
  Graph g;
  Expr p = g.Constant(Matrix(4, 1, 0.5));
  std::vector<Scalar> y{1, 0, 1, 1}, w(4, 1.0);
  EXPECT_NEAR(BinaryCrossEntropy(p, y, w).value()(0, 0), std::log(2.0), 1e-15);
}

TEST(AutogradTest, ShapeErrorsAreReported) {
  Graph g;
  Expr a = g.Constant(Matrix(2, 3));
  Expr b = g.Constant(Matrix(2, 2));
  EXPECT_THROW(Add(a, b), ShapeError);
  EXPECT_THROW(MatMul(a, b), ShapeError);
  EXPECT_THROW(SliceCols(a, 2, 2), ShapeError);
  Expr parts[] = {a, g.Constant(Matrix(3, 3))};
  EXPECT_THROW(ConcatCols(parts), ShapeError);
}

}  // namespace
}  // namespace pbp::nn
