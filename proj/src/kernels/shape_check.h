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

#ifndef PBP_SRC_KERNELS_SHAPE_CHECK_H_
#define PBP_SRC_KERNELS_SHAPE_CHECK_H_

#include <string>

#include "pbp/error.h"
#include "pbp/matrix.h"

namespace pbp::kernels {

struct GemmDims {
  std::size_t m, n, k;
};

inline GemmDims CheckGemm(bool trans_a, bool trans_b, const Matrix& a,
                          const Matrix& b, const Matrix& c) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb || c.rows() != m || c.cols() != n) {
    throw ShapeError("gemm: op(a) " + std::to_string(m) + "x" +
                     std::to_string(k) + ", op(b) " + std::to_string(kb) +
                     "x" + std::to_string(n) + ", c " + c.ShapeString());
  }
  return {m, n, k};
}

inline void CheckSameLength(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("length mismatch: " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace pbp::kernels

#endif  // PBP_SRC_KERNELS_SHAPE_CHECK_H_
