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
// Small string, file, hashing and random-number helpers shared by the
// modules.

#ifndef PBP_UTIL_H_
#define PBP_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pbp {

std::vector<std::string> Split(std::string_view s, char delim);
std::vector<std::string> SplitWhitespace(std::string_view s);
std::string_view Trim(std::string_view s);
std::string Join(std::span<const std::string> parts, std::string_view sep);
bool StartsWith(std::string_view s, std::string_view prefix);

std::optional<long long> ParseInt(std::string_view s);
std::optional<double> ParseDouble(std::string_view s);

// Whole-file read; throws IoError.
std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void Update(std::string_view bytes);
  std::uint64_t digest() const { return hash_; }
  std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};
std::string HashHex(std::string_view bytes);

// Unicode code point with its byte range in the source string.
struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};
// Decodes UTF-8; invalid bytes throw InvalidInput.
std::vector<CodePoint> DecodeUtf8(std::string_view s);

// Seeded generator with platform-independent output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t Next();
  // Uniform integer in [0, n); n > 0.
  std::uint64_t Below(std::uint64_t n);
  // Uniform real in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[Below(i)]);
    }
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace pbp

#endif  // PBP_UTIL_H_
