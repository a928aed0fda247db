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

// Reference kernels: plain loops, no threading, no blocking.

#include <algorithm>
#include <cmath>

#include "kernels/shape_check.h"
#include "pbp/kernels.h"

namespace pbp::kernels::serial {

void Gemm(bool trans_a, bool trans_b, Scalar alpha, const Matrix& a,
          const Matrix& b, Scalar beta, Matrix* c) {
  const GemmDims d = CheckGemm(trans_a, trans_b, a, b, *c);
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      Scalar sum = 0.0;
      for (std::size_t k = 0; k < d.k; ++k) {
        const Scalar av = trans_a ? a(k, i) : a(i, k);
        const Scalar bv = trans_b ? b(j, k) : b(k, j);
        sum += av * bv;
      }
      Scalar& out = (*c)(i, j);
      out = (beta == 0.0 ? 0.0 : beta * out) + alpha * sum;
    }
  }
}

void Sigmoid(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void Tanh(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

void Gelu(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
  }
}

void SoftmaxRows(const Matrix& x, Matrix* y) {
  y->Resize(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Scalar mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    Scalar total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      (*y)(r, c) = std::exp(x(r, c) - mx);
      total += (*y)(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) (*y)(r, c) /= total;
  }
}

void LayerNormRows(const Matrix& x, std::span<const Scalar> gamma,
                   std::span<const Scalar> beta, Scalar eps, Matrix* y,
                   std::vector<Scalar>* rstd) {
  CheckSameLength(gamma.size(), x.cols());
  CheckSameLength(beta.size(), x.cols());
  y->Resize(x.rows(), x.cols());
  rstd->assign(x.rows(), 0.0);
  const auto n = static_cast<Scalar>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Scalar mean = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) mean += x(r, c);
    mean /= n;
    Scalar var = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      var += (x(r, c) - mean) * (x(r, c) - mean);
    }
    var /= n;
    const Scalar inv = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = inv;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      (*y)(r, c) = gamma[c] * (x(r, c) - mean) * inv + beta[c];
    }
  }
}

}  // namespace pbp::kernels::serial
