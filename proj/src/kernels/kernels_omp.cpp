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

#include <algorithm>
#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels/shape_check.h"
#include "pbp/kernels.h"

namespace pbp::kernels {

namespace {

// Work size, in multiply-adds, below which a kernel stays on one thread.
constexpr std::int64_t kParallelWork = 1 << 15;

void ScaleRow(Scalar beta, Scalar* row, std::size_t n) {
  if (beta == 0.0) {
    std::fill(row, row + n, 0.0);
  } else if (beta != 1.0) {
    for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
  }
}

}  // namespace

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Each output row is owned by one thread and accumulated over k in
// ascending order.
void Gemm(bool trans_a, bool trans_b, Scalar alpha, const Matrix& a,
          const Matrix& b, Scalar beta, Matrix* c) {
  const GemmDims d = CheckGemm(trans_a, trans_b, a, b, *c);
  const auto m = static_cast<std::int64_t>(d.m);
  const std::size_t n = d.n;
  const std::size_t kk = d.k;
  const bool parallel = m * static_cast<std::int64_t>(n * kk) > kParallelWork;

  if (!trans_a && !trans_b) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < m; ++i) {
      Scalar* crow = c->row(i);
      ScaleRow(beta, crow, n);
      const Scalar* arow = a.row(i);
      for (std::size_t k = 0; k < kk; ++k) {
        const Scalar av = alpha * arow[k];
        if (av == 0.0) continue;
        const Scalar* brow = b.row(k);
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < m; ++i) {
      Scalar* crow = c->row(i);
      ScaleRow(beta, crow, n);
      const Scalar* arow = a.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const Scalar* brow = b.row(j);
        Scalar sum = 0.0;
        for (std::size_t k = 0; k < kk; ++k) sum += arow[k] * brow[k];
        crow[j] += alpha * sum;
      }
    }
  } else if (trans_a && !trans_b) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < m; ++i) {
      Scalar* crow = c->row(i);
      ScaleRow(beta, crow, n);
      for (std::size_t k = 0; k < kk; ++k) {
        const Scalar av = alpha * a(k, i);
        if (av == 0.0) continue;
        const Scalar* brow = b.row(k);
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < m; ++i) {
      Scalar* crow = c->row(i);
      ScaleRow(beta, crow, n);
      for (std::size_t j = 0; j < n; ++j) {
        const Scalar* brow = b.row(j);
        Scalar sum = 0.0;
        for (std::size_t k = 0; k < kk; ++k) sum += a(k, i) * brow[k];
        crow[j] += alpha * sum;
      }
    }
  }
}

void Sigmoid(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void Tanh(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void Gelu(std::span<const Scalar> x, std::span<Scalar> y) {
  CheckSameLength(x.size(), y.size());
  const auto n = static_cast<std::int64_t>(x.size());
  const Scalar inv_sqrt2 = 1.0 / std::sqrt(2.0);
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * inv_sqrt2));
  }
}

void SoftmaxRows(const Matrix& x, Matrix* y) {
  y->Resize(x.rows(), x.cols());
  const auto rows = static_cast<std::int64_t>(x.rows());
  const std::size_t cols = x.cols();
  const bool parallel = rows * static_cast<std::int64_t>(cols) > kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t r = 0; r < rows; ++r) {
    const Scalar* in = x.row(r);
    Scalar* out = y->row(r);
    const Scalar mx = *std::max_element(in, in + cols);
    Scalar total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      total += out[c];
    }
    const Scalar inv = 1.0 / total;
    for (std::size_t c = 0; c < cols; ++c) out[c] *= inv;
  }
}

void LayerNormRows(const Matrix& x, std::span<const Scalar> gamma,
                   std::span<const Scalar> beta, Scalar eps, Matrix* y,
                   std::vector<Scalar>* rstd) {
  CheckSameLength(gamma.size(), x.cols());
  CheckSameLength(beta.size(), x.cols());
  y->Resize(x.rows(), x.cols());
  rstd->assign(x.rows(), 0.0);
  const auto rows = static_cast<std::int64_t>(x.rows());
  const std::size_t cols = x.cols();
  const auto n = static_cast<Scalar>(cols);
  const bool parallel = rows * static_cast<std::int64_t>(cols) > kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t r = 0; r < rows; ++r) {
    const Scalar* in = x.row(r);
    Scalar* out = y->row(r);
    Scalar mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= n;
    Scalar var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      var += (in[c] - mean) * (in[c] - mean);
    }
    var /= n;
    const Scalar inv = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      out[c] = gamma[c] * (in[c] - mean) * inv + beta[c];
    }
  }
}

}  // namespace pbp::kernels
