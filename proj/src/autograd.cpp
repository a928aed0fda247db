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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pbp/error.h"
#include "pbp/kernels.h"

namespace pbp::nn {

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::Add(const std::string& name, Matrix init,
                               bool trainable) {
  if (index_.count(name) != 0) {
    throw InvalidInput("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(init);
  p->trainable = trainable;
  if (trainable) p->grad = Matrix(p->value.rows(), p->value.cols());
  Parameter* raw = p.get();
  params_.push_back(std::move(p));
  index_.emplace(name, raw);
  return *raw;
}

Parameter* ParameterStore::Find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

const Parameter* ParameterStore::Find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Parameter& ParameterStore::Get(std::string_view name) {
  Parameter* p = Find(name);
  if (p == nullptr) throw InvalidInput("unknown parameter: " + std::string(name));
  return *p;
}

const Parameter& ParameterStore::Get(std::string_view name) const {
  const Parameter* p = Find(name);
  if (p == nullptr) throw InvalidInput("unknown parameter: " + std::string(name));
  return *p;
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterStore::SetTrainable(Parameter& p, bool trainable) {
  p.trainable = trainable;
  if (trainable) {
    p.grad = Matrix(p.value.rows(), p.value.cols());
  } else {
    p.grad = Matrix();
  }
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) {
    if (p->trainable) p->grad.Fill(0.0);
  }
}

// ---------------------------------------------------------------------------
// Graph

const Matrix& Expr::value() const { return graph_->Value(id_); }

Expr Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

Expr Graph::Param(Parameter& param) {
  Node n;
  n.param = &param;
  n.requires_grad = param.trainable;
  nodes_.push_back(std::move(n));
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

const Matrix& Graph::Value(int id) const {
  const Node& n = nodes_[id];
  return n.param != nullptr ? n.param->value : n.value;
}

Matrix& Graph::Grad(int id) {
  Node& n = nodes_[id];
  if (n.param != nullptr) {
    if (n.param->grad.size() != n.param->value.size()) {
      n.param->grad = Matrix(n.param->value.rows(), n.param->value.cols());
    }
    return n.param->grad;
  }
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Expr Graph::AddNode(Matrix value, std::vector<int> inputs,
                    BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int in : inputs) n.requires_grad = n.requires_grad || RequiresGrad(in);
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

void Graph::Backward(Expr root) {
  if (root.graph() != this) throw InvalidInput("Backward: foreign expression");
  const Matrix& v = Value(root.id());
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("Backward: root must be 1x1, got " + v.ShapeString());
  }
  if (!RequiresGrad(root.id())) return;
  Grad(root.id())(0, 0) += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Graph& SameGraph(Expr a, Expr b) {
  if (a.graph() == nullptr || a.graph() != b.graph()) {
    throw InvalidInput("expressions belong to different graphs");
  }
  return *a.graph();
}

void RequireSameShape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": " + a.ShapeString() + " vs " +
                     b.ShapeString());
  }
}

void AddInto(Matrix& dst, const Matrix& src, Scalar scale = 1.0) {
  Scalar* d = dst.data();
  const Scalar* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += scale * s[i];
}

}  // namespace

Expr MatMul(Expr a, Expr b) {
  Graph& g = SameGraph(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), bv.cols());
  kernels::Gemm(false, false, 1.0, av, bv, 0.0, &out);
  const int ia = a.id(), ib = b.id();
  return g.AddNode(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    if (g.RequiresGrad(ia)) {
      kernels::Gemm(false, true, 1.0, dout, g.Value(ib), 1.0, &g.Grad(ia));
    }
    if (g.RequiresGrad(ib)) {
      kernels::Gemm(true, false, 1.0, g.Value(ia), dout, 1.0, &g.Grad(ib));
    }
  });
}

Expr MatMulNT(Expr a, Expr b) {
  Graph& g = SameGraph(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), bv.rows());
  kernels::Gemm(false, true, 1.0, av, bv, 0.0, &out);
  const int ia = a.id(), ib = b.id();
  return g.AddNode(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    if (g.RequiresGrad(ia)) {
      kernels::Gemm(false, false, 1.0, dout, g.Value(ib), 1.0, &g.Grad(ia));
    }
    if (g.RequiresGrad(ib)) {
      kernels::Gemm(true, false, 1.0, dout, g.Value(ia), 1.0, &g.Grad(ib));
    }
  });
}

Expr Add(Expr a, Expr b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape("Add", a.value(), b.value());
  Matrix out = a.value();
  AddInto(out, b.value());
  const int ia = a.id(), ib = b.id();
  return g.AddNode(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    if (g.RequiresGrad(ia)) AddInto(g.Grad(ia), dout);
    if (g.RequiresGrad(ib)) AddInto(g.Grad(ib), dout);
  });
}

Expr AddRow(Expr a, Expr row) {
  Graph& g = SameGraph(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("AddRow: " + av.ShapeString() + " + " + rv.ShapeString());
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    Scalar* o = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) o[c] += rv(0, c);
  }
  const int ia = a.id(), ir = row.id();
  return g.AddNode(std::move(out), {ia, ir}, [ia, ir](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    if (g.RequiresGrad(ia)) AddInto(g.Grad(ia), dout);
    if (g.RequiresGrad(ir)) {
      Matrix& dr = g.Grad(ir);
      for (std::size_t r = 0; r < dout.rows(); ++r) {
        const Scalar* d = dout.row(r);
        for (std::size_t c = 0; c < dout.cols(); ++c) dr(0, c) += d[c];
      }
    }
  });
}

Expr Mul(Expr a, Expr b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape("Mul", a.value(), b.value());
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
  const int ia = a.id(), ib = b.id();
  return g.AddNode(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    if (g.RequiresGrad(ia)) {
      Matrix& da = g.Grad(ia);
      const Matrix& bv = g.Value(ib);
      for (std::size_t i = 0; i < da.size(); ++i) {
        da.data()[i] += dout.data()[i] * bv.data()[i];
      }
    }
    if (g.RequiresGrad(ib)) {
      Matrix& db = g.Grad(ib);
      const Matrix& av = g.Value(ia);
      for (std::size_t i = 0; i < db.size(); ++i) {
        db.data()[i] += dout.data()[i] * av.data()[i];
      }
    }
  });
}

Expr Scale(Expr a, Scalar s) {
  Graph& g = *a.graph();
  Matrix out = a.value();
  for (Scalar& v : out.values()) v *= s;
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia, s](Graph& g, int self) {
    AddInto(g.Grad(ia), g.Grad(self), s);
  });
}

Expr Sigmoid(Expr a) {
  Graph& g = *a.graph();
  Matrix out(a.rows(), a.cols());
  kernels::Sigmoid(a.value().values(), out.values());
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.Value(self);
    const Matrix& dout = g.Grad(self);
    Matrix& da = g.Grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const Scalar yi = y.data()[i];
      da.data()[i] += dout.data()[i] * yi * (1.0 - yi);
    }
  });
}

Expr Tanh(Expr a) {
  Graph& g = *a.graph();
  Matrix out(a.rows(), a.cols());
  kernels::Tanh(a.value().values(), out.values());
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.Value(self);
    const Matrix& dout = g.Grad(self);
    Matrix& da = g.Grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const Scalar yi = y.data()[i];
      da.data()[i] += dout.data()[i] * (1.0 - yi * yi);
    }
  });
}

Expr Gelu(Expr a) {
  Graph& g = *a.graph();
  Matrix out(a.rows(), a.cols());
  kernels::Gelu(a.value().values(), out.values());
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.Value(ia);
    const Matrix& dout = g.Grad(self);
    Matrix& da = g.Grad(ia);
    const Scalar inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const Scalar inv_sqrt2pi = std::numbers::inv_sqrtpi * inv_sqrt2;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Scalar xi = x.data()[i];
      const Scalar cdf = 0.5 * (1.0 + std::erf(xi * inv_sqrt2));
      const Scalar pdf = inv_sqrt2pi * std::exp(-0.5 * xi * xi);
      da.data()[i] += dout.data()[i] * (cdf + xi * pdf);
    }
  });
}

Expr SoftmaxRows(Expr a) {
  Graph& g = *a.graph();
  Matrix out;
  kernels::SoftmaxRows(a.value(), &out);
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.Value(self);
    const Matrix& dout = g.Grad(self);
    Matrix& da = g.Grad(ia);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const Scalar* yr = y.row(r);
      const Scalar* dr = dout.row(r);
      Scalar dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += yr[c] * dr[c];
      Scalar* out = da.row(r);
      for (std::size_t c = 0; c < y.cols(); ++c) out[c] += yr[c] * (dr[c] - dot);
    }
  });
}

Expr LayerNorm(Expr x, Expr gamma, Expr beta, Scalar eps) {
  Graph& g = SameGraph(x, gamma);
  SameGraph(x, beta);
  const Matrix& xv = x.value();
  const Matrix& gv = gamma.value();
  const Matrix& bv = beta.value();
  if (gv.rows() != 1 || gv.cols() != xv.cols() || !gv.SameShape(bv)) {
    throw ShapeError("LayerNorm: x " + xv.ShapeString() + ", gamma " +
                     gv.ShapeString() + ", beta " + bv.ShapeString());
  }
  Matrix out;
  std::vector<Scalar> rstd;
  kernels::LayerNormRows(xv, gv.values(), bv.values(), eps, &out, &rstd);
  // Normalized input, kept for the backward pass.
  Matrix xhat(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    Scalar mean = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) mean += xv(r, c);
    mean /= static_cast<Scalar>(xv.cols());
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      xhat(r, c) = (xv(r, c) - mean) * rstd[r];
    }
  }
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return g.AddNode(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), rstd = std::move(rstd)](Graph& g,
                                                                   int self) {
        const Matrix& dout = g.Grad(self);
        const Matrix& gv = g.Value(ig);
        const std::size_t cols = dout.cols();
        const auto n = static_cast<Scalar>(cols);
        if (g.RequiresGrad(ig)) {
          Matrix& dg = g.Grad(ig);
          for (std::size_t r = 0; r < dout.rows(); ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              dg(0, c) += dout(r, c) * xhat(r, c);
            }
          }
        }
        if (g.RequiresGrad(ib)) {
          Matrix& db = g.Grad(ib);
          for (std::size_t r = 0; r < dout.rows(); ++r) {
            for (std::size_t c = 0; c < cols; ++c) db(0, c) += dout(r, c);
          }
        }
        if (g.RequiresGrad(ix)) {
          Matrix& dx = g.Grad(ix);
          for (std::size_t r = 0; r < dout.rows(); ++r) {
            Scalar sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const Scalar d = dout(r, c) * gv(0, c);
              sum_d += d;
              sum_dx += d * xhat(r, c);
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const Scalar d = dout(r, c) * gv(0, c);
              dx(r, c) += rstd[r] / n * (n * d - sum_d - xhat(r, c) * sum_dx);
            }
          }
        }
      });
}

Expr ConcatCols(std::span<const Expr> parts) {
  if (parts.empty()) throw InvalidInput("ConcatCols: no inputs");
  Graph& g = *parts[0].graph();
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const Expr& p : parts) {
    if (p.graph() != &g) throw InvalidInput("ConcatCols: mixed graphs");
    if (p.rows() != rows) {
      throw ShapeError("ConcatCols: row counts " + std::to_string(rows) +
                       " vs " + std::to_string(p.rows()));
    }
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r), v.row(r) + v.cols(), out.row(r) + offsets[k]);
    }
  }
  std::vector<int> inputs = ids;
  return g.AddNode(std::move(out), std::move(inputs),
                   [ids, offsets](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (!g.RequiresGrad(ids[k])) continue;
                       Matrix& d = g.Grad(ids[k]);
                       for (std::size_t r = 0; r < d.rows(); ++r) {
                         const Scalar* src = dout.row(r) + offsets[k];
                         Scalar* dst = d.row(r);
                         for (std::size_t c = 0; c < d.cols(); ++c) dst[c] += src[c];
                       }
                     }
                   });
}

Expr SliceCols(Expr a, std::size_t begin, std::size_t count) {
  Graph& g = *a.graph();
  const Matrix& av = a.value();
  if (begin + count > av.cols()) {
    throw ShapeError("SliceCols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + av.ShapeString());
  }
  Matrix out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r) + begin, av.row(r) + begin + count, out.row(r));
  }
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia, begin](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    Matrix& da = g.Grad(ia);
    for (std::size_t r = 0; r < dout.rows(); ++r) {
      const Scalar* src = dout.row(r);
      Scalar* dst = da.row(r) + begin;
      for (std::size_t c = 0; c < dout.cols(); ++c) dst[c] += src[c];
    }
  });
}

Expr ConcatRows(std::span<const Expr> parts) {
  if (parts.empty()) throw InvalidInput("ConcatRows: no inputs");
  Graph& g = *parts[0].graph();
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const Expr& p : parts) {
    if (p.graph() != &g) throw InvalidInput("ConcatRows: mixed graphs");
    if (p.cols() != cols) {
      throw ShapeError("ConcatRows: column counts " + std::to_string(cols) +
                       " vs " + std::to_string(p.cols()));
    }
    ids.push_back(p.id());
    offsets.push_back(rows);
    rows += p.rows();
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& v = parts[k].value();
    std::copy(v.data(), v.data() + v.size(), out.row(offsets[k]));
  }
  std::vector<int> inputs = ids;
  return g.AddNode(std::move(out), std::move(inputs),
                   [ids, offsets](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (!g.RequiresGrad(ids[k])) continue;
                       Matrix& d = g.Grad(ids[k]);
                       const Scalar* src = dout.row(offsets[k]);
                       for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] += src[i];
                     }
                   });
}

Expr SliceRows(Expr a, std::size_t begin, std::size_t count) {
  Graph& g = *a.graph();
  const Matrix& av = a.value();
  if (begin + count > av.rows()) {
    throw ShapeError("SliceRows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + av.ShapeString());
  }
  Matrix out(count, av.cols());
  std::copy(av.row(begin), av.row(begin) + count * av.cols(), out.data());
  const int ia = a.id();
  return g.AddNode(std::move(out), {ia}, [ia, begin](Graph& g, int self) {
    const Matrix& dout = g.Grad(self);
    Scalar* dst = g.Grad(ia).row(begin);
    for (std::size_t i = 0; i < dout.size(); ++i) dst[i] += dout.data()[i];
  });
}

Expr Lookup(Expr table, std::span<const int> ids) {
  Graph& g = *table.graph();
  const Matrix& tv = table.value();
  Matrix out(ids.size(), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0) continue;
    if (static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw ShapeError("Lookup: id " + std::to_string(ids[i]) +
                       " out of range for table " + tv.ShapeString());
    }
    std::copy(tv.row(ids[i]), tv.row(ids[i]) + tv.cols(), out.row(i));
  }
  const int it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return g.AddNode(std::move(out), {it},
                   [it, rows = std::move(rows)](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     Matrix& dt = g.Grad(it);
                     for (std::size_t i = 0; i < rows.size(); ++i) {
                       if (rows[i] < 0) continue;
                       Scalar* dst = dt.row(rows[i]);
                       const Scalar* src = dout.row(i);
                       for (std::size_t c = 0; c < dt.cols(); ++c) dst[c] += src[c];
                     }
                   });
}

Expr GatherRows(std::span<const Expr> sources, std::span<const RowRef> refs) {
  if (sources.empty()) throw InvalidInput("GatherRows: no sources");
  Graph& g = *sources[0].graph();
  const std::size_t cols = sources[0].cols();
  std::vector<int> ids;
  for (const Expr& s : sources) {
    if (s.graph() != &g) throw InvalidInput("GatherRows: mixed graphs");
    if (s.cols() != cols) throw ShapeError("GatherRows: column mismatch");
    ids.push_back(s.id());
  }
  Matrix out(refs.size(), cols);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].source < 0) continue;
    const Matrix& v = sources[refs[i].source].value();
    if (refs[i].row < 0 || static_cast<std::size_t>(refs[i].row) >= v.rows()) {
      throw ShapeError("GatherRows: row " + std::to_string(refs[i].row) +
                       " out of range for " + v.ShapeString());
    }
    std::copy(v.row(refs[i].row), v.row(refs[i].row) + cols, out.row(i));
  }
  std::vector<int> inputs = ids;
  std::vector<RowRef> saved(refs.begin(), refs.end());
  return g.AddNode(std::move(out), std::move(inputs),
                   [ids, saved = std::move(saved)](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     for (std::size_t i = 0; i < saved.size(); ++i) {
                       if (saved[i].source < 0) continue;
                       const int id = ids[saved[i].source];
                       if (!g.RequiresGrad(id)) continue;
                       Scalar* dst = g.Grad(id).row(saved[i].row);
                       const Scalar* src = dout.row(i);
                       for (std::size_t c = 0; c < dout.cols(); ++c) dst[c] += src[c];
                     }
                   });
}

Expr SpanMean(Expr x, std::span<const Span> spans) {
  Graph& g = *x.graph();
  const Matrix& xv = x.value();
  Matrix out(spans.size(), xv.cols());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span s = spans[i];
    if (s.begin >= s.end || s.end > xv.rows()) {
      throw ShapeError("SpanMean: span [" + std::to_string(s.begin) + ", " +
                       std::to_string(s.end) + ") invalid for " +
                       std::to_string(xv.rows()) + " rows");
    }
    const Scalar inv = 1.0 / static_cast<Scalar>(s.size());
    for (std::size_t r = s.begin; r < s.end; ++r) {
      for (std::size_t c = 0; c < xv.cols(); ++c) out(i, c) += xv(r, c);
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) out(i, c) *= inv;
  }
  const int ix = x.id();
  std::vector<Span> saved(spans.begin(), spans.end());
  return g.AddNode(std::move(out), {ix},
                   [ix, saved = std::move(saved)](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     Matrix& dx = g.Grad(ix);
                     for (std::size_t i = 0; i < saved.size(); ++i) {
                       const Scalar inv = 1.0 / static_cast<Scalar>(saved[i].size());
                       for (std::size_t r = saved[i].begin; r < saved[i].end; ++r) {
                         for (std::size_t c = 0; c < dx.cols(); ++c) {
                           dx(r, c) += inv * dout(i, c);
                         }
                       }
                     }
                   });
}

Expr ScalarMix(std::span<const Expr> layers, Expr weights, Expr gamma) {
  if (layers.empty()) throw InvalidInput("ScalarMix: no layers");
  Graph& g = SameGraph(weights, gamma);
  const Matrix& wv = weights.value();
  const Matrix& gv = gamma.value();
  if (wv.rows() != 1 || wv.cols() != layers.size() || gv.size() != 1) {
    throw ShapeError("ScalarMix: weights " + wv.ShapeString() + " for " +
                     std::to_string(layers.size()) + " layers, gamma " +
                     gv.ShapeString());
  }
  const Matrix& first = layers[0].value();
  std::vector<int> layer_ids;
  for (const Expr& l : layers) {
    if (l.graph() != &g) throw InvalidInput("ScalarMix: mixed graphs");
    if (!l.value().SameShape(first)) {
      throw ShapeError("ScalarMix: layer shapes " + first.ShapeString() +
                       " vs " + l.value().ShapeString());
    }
    layer_ids.push_back(l.id());
  }
  Matrix s;
  kernels::serial::SoftmaxRows(wv, &s);
  const Scalar scale = gv(0, 0);
  Matrix out(first.rows(), first.cols());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    AddInto(out, layers[k].value(), scale * s(0, k));
  }
  const int iw = weights.id(), ig = gamma.id();
  std::vector<int> inputs = layer_ids;
  inputs.push_back(iw);
  inputs.push_back(ig);
  return g.AddNode(
      std::move(out), std::move(inputs),
      [layer_ids, iw, ig, s = std::move(s)](Graph& g, int self) {
        const Matrix& dout = g.Grad(self);
        const Scalar scale = g.Value(ig)(0, 0);
        const std::size_t n = layer_ids.size();
        // dots[k] = <dout, layer_k>
        std::vector<Scalar> dots(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          const Matrix& lv = g.Value(layer_ids[k]);
          Scalar d = 0.0;
          for (std::size_t i = 0; i < lv.size(); ++i) {
            d += dout.data()[i] * lv.data()[i];
          }
          dots[k] = d;
          if (g.RequiresGrad(layer_ids[k])) {
            AddInto(g.Grad(layer_ids[k]), dout, scale * s(0, k));
          }
        }
        if (g.RequiresGrad(ig)) {
          Scalar dg = 0.0;
          for (std::size_t k = 0; k < n; ++k) dg += s(0, k) * dots[k];
          g.Grad(ig)(0, 0) += dg;
        }
        if (g.RequiresGrad(iw)) {
          Scalar mean = 0.0;
          for (std::size_t k = 0; k < n; ++k) mean += s(0, k) * scale * dots[k];
          Matrix& dw = g.Grad(iw);
          for (std::size_t k = 0; k < n; ++k) {
            dw(0, k) += s(0, k) * (scale * dots[k] - mean);
          }
        }
      });
}

Expr Blend(std::span<const Scalar> mask, Expr a, Expr b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape("Blend", a.value(), b.value());
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (mask.size() != av.rows()) {
    throw ShapeError("Blend: mask length " + std::to_string(mask.size()) +
                     " for " + av.ShapeString());
  }
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const Scalar m = mask[r];
    for (std::size_t c = 0; c < av.cols(); ++c) {
      out(r, c) = m * av(r, c) + (1.0 - m) * bv(r, c);
    }
  }
  const int ia = a.id(), ib = b.id();
  std::vector<Scalar> saved(mask.begin(), mask.end());
  return g.AddNode(std::move(out), {ia, ib},
                   [ia, ib, saved = std::move(saved)](Graph& g, int self) {
                     const Matrix& dout = g.Grad(self);
                     for (std::size_t r = 0; r < dout.rows(); ++r) {
                       const Scalar m = saved[r];
                       for (std::size_t c = 0; c < dout.cols(); ++c) {
                         if (g.RequiresGrad(ia)) g.Grad(ia)(r, c) += m * dout(r, c);
                         if (g.RequiresGrad(ib)) {
                           g.Grad(ib)(r, c) += (1.0 - m) * dout(r, c);
                         }
                       }
                     }
                   });
}

Expr Sum(Expr a) {
  Graph& g = *a.graph();
  Scalar total = 0.0;
  for (Scalar v : a.value().values()) total += v;
  const int ia = a.id();
  return g.AddNode(Matrix(1, 1, total), {ia}, [ia](Graph& g, int self) {
    const Scalar d = g.Grad(self)(0, 0);
    for (Scalar& v : g.Grad(ia).values()) v += d;
  });
}

Expr BinaryCrossEntropy(Expr probs, std::span<const Scalar> targets,
                        std::span<const Scalar> weights, Scalar eps) {
  Graph& g = *probs.graph();
  const Matrix& pv = probs.value();
  if (pv.cols() != 1 || pv.rows() != targets.size() ||
      targets.size() != weights.size()) {
    throw ShapeError("BinaryCrossEntropy: probs " + pv.ShapeString() +
                     ", targets " + std::to_string(targets.size()) +
                     ", weights " + std::to_string(weights.size()));
  }
  Scalar total_w = 0.0;
  for (Scalar w : weights) total_w += w;
  if (total_w <= 0.0) throw InvalidInput("BinaryCrossEntropy: zero total weight");
  Scalar loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Scalar p = std::clamp(pv(i, 0), eps, 1.0 - eps);
    const Scalar y = targets[i];
    loss -= weights[i] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  loss /= total_w;
  const int ip = probs.id();
  std::vector<Scalar> t(targets.begin(), targets.end());
  std::vector<Scalar> w(weights.begin(), weights.end());
  return g.AddNode(
      Matrix(1, 1, loss), {ip},
      [ip, t = std::move(t), w = std::move(w), total_w, eps](Graph& g,
                                                            int self) {
        const Scalar d = g.Grad(self)(0, 0) / total_w;
        const Matrix& pv = g.Value(ip);
        Matrix& dp = g.Grad(ip);
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (w[i] == 0.0) continue;
          const Scalar p = pv(i, 0);
          if (p < eps || p > 1.0 - eps) continue;  // clamped: zero slope
          dp(i, 0) += d * w[i] * (-t[i] / p + (1.0 - t[i]) / (1.0 - p));
        }
      });
}

}  // namespace pbp::nn
