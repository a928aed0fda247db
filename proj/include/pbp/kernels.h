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

// Dense numeric kernels. The functions in pbp::kernels are OpenMP-parallel
// and are what the rest of the library calls; pbp::kernels::serial holds
// straightforward single-threaded reference versions with identical
// signatures, used by the tests and the benchmark as a baseline.

#ifndef PBP_KERNELS_H_
#define PBP_KERNELS_H_

#include <span>
#include <vector>

#include "pbp/matrix.h"

namespace pbp::kernels {

// c = alpha * op(a) * op(b) + beta * c, op(x) = x or x^T. `c` must already
// have the result shape; when beta == 0 its previous contents are ignored.
void Gemm(bool trans_a, bool trans_b, Scalar alpha, const Matrix& a,
          const Matrix& b, Scalar beta, Matrix* c);

void Sigmoid(std::span<const Scalar> x, std::span<Scalar> y);
void Tanh(std::span<const Scalar> x, std::span<Scalar> y);
// Exact (erf) GELU.
void Gelu(std::span<const Scalar> x, std::span<Scalar> y);

// Row-wise numerically stable softmax.
void SoftmaxRows(const Matrix& x, Matrix* y);

// Row-wise layer normalization: y = gamma * (x - mean) * rstd + beta.
// `rstd` receives 1/sqrt(var + eps) per row (needed for the backward pass).
void LayerNormRows(const Matrix& x, std::span<const Scalar> gamma,
                   std::span<const Scalar> beta, Scalar eps, Matrix* y,
                   std::vector<Scalar>* rstd);

// Number of OpenMP threads the parallel kernels will use.
int MaxThreads();

namespace serial {

void Gemm(bool trans_a, bool trans_b, Scalar alpha, const Matrix& a,
          const Matrix& b, Scalar beta, Matrix* c);
void Sigmoid(std::span<const Scalar> x, std::span<Scalar> y);
void Tanh(std::span<const Scalar> x, std::span<Scalar> y);
void Gelu(std::span<const Scalar> x, std::span<Scalar> y);
void SoftmaxRows(const Matrix& x, Matrix* y);
void LayerNormRows(const Matrix& x, std::span<const Scalar> gamma,
                   std::span<const Scalar> beta, Scalar eps, Matrix* y,
                   std::vector<Scalar>* rstd);

}  // namespace serial

}  // namespace pbp::kernels

#endif  // PBP_KERNELS_H_
