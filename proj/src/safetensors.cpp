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

#include "pbp/safetensors.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "json.hpp"

#include "pbp/error.h"
#include "pbp/util.h"

static_assert(std::endian::native == std::endian::little,
              "safetensors I/O assumes a little-endian host");

namespace pbp {

namespace {

std::size_t DtypeSize(const std::string& dtype) {
  if (dtype == "F64" || dtype == "I64") return 8;
  if (dtype == "F32" || dtype == "I32") return 4;
  if (dtype == "F16" || dtype == "BF16") return 2;
  return 0;
}

double HalfToDouble(std::uint16_t h) {
  const int sign = (h >> 15) & 1;
  const int exp = (h >> 10) & 0x1f;
  const int mant = h & 0x3ff;
  double v;
  if (exp == 0) {
    v = std::ldexp(static_cast<double>(mant), -24);
  } else if (exp == 31) {
    v = mant == 0 ? INFINITY : NAN;
  } else {
    v = std::ldexp(static_cast<double>(mant | 0x400), exp - 25);
  }
  return sign ? -v : v;
}

template <typename T>
T Load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double Decode(const std::string& dtype, const char* p) {
  if (dtype == "F64") return Load<double>(p);
  if (dtype == "F32") return Load<float>(p);
  if (dtype == "I64") return static_cast<double>(Load<std::int64_t>(p));
  if (dtype == "I32") return Load<std::int32_t>(p);
  if (dtype == "F16") return HalfToDouble(Load<std::uint16_t>(p));
  // BF16: the high half of an IEEE float.
  const std::uint32_t bits = static_cast<std::uint32_t>(Load<std::uint16_t>(p)) << 16;
  return std::bit_cast<float>(bits);
}

}  // namespace

Matrix Tensor::ToMatrix() const {
  if (shape.size() == 1) return Matrix(1, shape[0], data);
  if (shape.size() == 2) return Matrix(shape[0], shape[1], data);
  if (shape.empty()) return Matrix(1, 1, data);
  throw ShapeError("tensor of rank " + std::to_string(shape.size()) +
                   " cannot be viewed as a matrix");
}

Tensor Tensor::FromMatrix(const Matrix& m) {
  Tensor t;
  t.shape = {m.rows(), m.cols()};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

TensorFile ParseSafetensors(std::string_view bytes, std::string_view source) {
  const std::string where(source);
  if (bytes.size() < 8) throw ParseError(where + ": truncated safetensors header");
  const auto header_len = Load<std::uint64_t>(bytes.data());
  if (header_len > bytes.size() - 8) {
    throw ParseError(where + ": header length exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": bad safetensors header: " + e.what());
  }
  const std::string_view body = bytes.substr(8 + header_len);
  TensorFile file;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : info.items()) file.metadata[k] = v.get<std::string>();
      continue;
    }
    const std::string dtype = info.at("dtype").get<std::string>();
    const std::size_t width = DtypeSize(dtype);
    if (width == 0) throw ParseError(where + ": tensor '" + name + "' has unsupported dtype " + dtype);
    Tensor t;
    t.shape = info.at("shape").get<std::vector<std::size_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::size_t>>();
    std::size_t count = 1;
    for (std::size_t d : t.shape) count *= d;
    if (offsets.size() != 2 || offsets[1] < offsets[0] || offsets[1] > body.size() ||
        offsets[1] - offsets[0] != count * width) {
      throw ParseError(where + ": tensor '" + name + "' has inconsistent offsets");
    }
    t.data.resize(count);
    const char* p = body.data() + offsets[0];
    for (std::size_t i = 0; i < count; ++i) t.data[i] = Decode(dtype, p + i * width);
    file.tensors.emplace(name, std::move(t));
  }
  return file;
}

TensorFile ReadSafetensors(const std::filesystem::path& path) {
  return ParseSafetensors(ReadFile(path), path.string());
}

std::string SerializeSafetensors(const TensorFile& file) {
  nlohmann::json header = nlohmann::json::object();
  if (!file.metadata.empty()) header["__metadata__"] = file.metadata;
  std::size_t offset = 0;
  for (const auto& [name, t] : file.tensors) {
    const std::size_t bytes = t.data.size() * sizeof(double);
    header[name] = {{"dtype", "F64"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string head = header.dump();
  while ((head.size() + 8) % 8 != 0) head.push_back(' ');
  std::string out(8, '\0');
  const std::uint64_t len = head.size();
  std::memcpy(out.data(), &len, 8);
  out += head;
  out.reserve(out.size() + offset);
  for (const auto& [name, t] : file.tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(double));
  }
  return out;
}

}  // namespace pbp
