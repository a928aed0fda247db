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

// Reader and writer for the safetensors tensor container: an 8-byte
// little-endian header length, a JSON header mapping tensor names to dtype,
// shape and byte offsets, then the raw little-endian tensor bytes.

#ifndef PBP_SAFETENSORS_H_
#define PBP_SAFETENSORS_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/matrix.h"

namespace pbp {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<Scalar> data;

  // 1-D tensors become a single row; 2-D tensors keep their shape.
  Matrix ToMatrix() const;
  static Tensor FromMatrix(const Matrix& m);
};

struct TensorFile {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> metadata;
};

// Accepts F64, F32, F16, BF16, I64 and I32 tensors, widening to double.
TensorFile ParseSafetensors(std::string_view bytes, std::string_view source = "<memory>");
TensorFile ReadSafetensors(const std::filesystem::path& path);
// Writes every tensor as F64, so values round-trip exactly.
std::string SerializeSafetensors(const TensorFile& file);

}  // namespace pbp

#endif  // PBP_SAFETENSORS_H_
