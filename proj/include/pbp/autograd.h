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

// A small tape-based reverse-mode autodiff over Matrix values.
//
// A Graph records every operation applied to its expressions. Parameters are
// owned by a ParameterStore and enter a graph as leaves; Backward() on a 1x1
// expression accumulates d(root)/d(param) into each trainable parameter's
// grad. Graphs are single-use: build one per forward pass. Forward passes
// only read parameter values, so several graphs may share one store across
// threads as long as nobody calls Backward() or updates parameters
// concurrently.

#ifndef PBP_AUTOGRAD_H_
#define PBP_AUTOGRAD_H_

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/matrix.h"

namespace pbp::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value when trainable, empty otherwise
  bool trainable = true;
};

// Named parameters with stable addresses, kept in insertion order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter& Add(const std::string& name, Matrix init, bool trainable = true);
  Parameter* Find(std::string_view name);
  const Parameter* Find(std::string_view name) const;
  Parameter& Get(std::string_view name);
  const Parameter& Get(std::string_view name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::size_t size() const { return params_.size(); }

  void SetTrainable(Parameter& p, bool trainable);
  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*, std::less<>> index_;
};

class Graph;

class Expr {
 public:
  Expr() = default;
  Expr(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr Constant(Matrix value);
  Expr Param(Parameter& param);

  const Matrix& Value(int id) const;
  const Matrix& Value(Expr e) const { return Value(e.id()); }
  bool RequiresGrad(int id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of node `id`, allocated as zeros on first use. For
  // parameter leaves this is the parameter's own grad.
  Matrix& Grad(int id);

  // Appends a node. `backward`, when the node requires a gradient, reads
  // Grad(self) and accumulates into Grad() of the inputs that require one.
  Expr AddNode(Matrix value, std::vector<int> inputs, BackwardFn backward);

  // Reverse pass from a 1x1 root with seed gradient 1.
  void Backward(Expr root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool has_grad = false;
  };
  std::deque<Node> nodes_;
};

// Row reference for GatherRows: (source index, row); source -1 yields zeros.
struct RowRef {
  int source;
  int row;
};

// Half-open row range [begin, end).
struct Span {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

Expr MatMul(Expr a, Expr b);    // a * b
Expr MatMulNT(Expr a, Expr b);  // a * b^T
Expr Add(Expr a, Expr b);
Expr AddRow(Expr a, Expr row);  // adds a 1 x cols row to every row of a
Expr Mul(Expr a, Expr b);       // elementwise
Expr Scale(Expr a, Scalar s);
Expr Sigmoid(Expr a);
Expr Tanh(Expr a);
Expr Gelu(Expr a);
Expr SoftmaxRows(Expr a);
Expr LayerNorm(Expr x, Expr gamma, Expr beta, Scalar eps);
Expr ConcatCols(std::span<const Expr> parts);
Expr SliceCols(Expr a, std::size_t begin, std::size_t count);
Expr ConcatRows(std::span<const Expr> parts);
Expr SliceRows(Expr a, std::size_t begin, std::size_t count);
// Rows of `table` selected by `ids`; an id of -1 yields a zero row.
Expr Lookup(Expr table, std::span<const int> ids);
Expr GatherRows(std::span<const Expr> sources, std::span<const RowRef> refs);
// Row i of the result is the mean of rows spans[i] of x.
Expr SpanMean(Expr x, std::span<const Span> spans);
// gamma * sum_k softmax(weights)_k * layers[k]; weights is 1 x L, gamma 1x1.
Expr ScalarMix(std::span<const Expr> layers, Expr weights, Expr gamma);
// Row r: mask[r] * a + (1 - mask[r]) * b.
Expr Blend(std::span<const Scalar> mask, Expr a, Expr b);
Expr Sum(Expr a);
// Weighted mean binary cross-entropy of an N x 1 probability column:
// sum_i w_i * ce(p_i, y_i) / sum_i w_i, with p clamped to [eps, 1 - eps].
Expr BinaryCrossEntropy(Expr probs, std::span<const Scalar> targets,
                        std::span<const Scalar> weights, Scalar eps = 1e-7);

}  // namespace pbp::nn

#endif  // PBP_AUTOGRAD_H_
