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

#include "pbp/archive.h"

#include <cstdio>
#include <cstring>

#include "pbp/error.h"

namespace pbp {

namespace {

constexpr std::size_t kBlock = 512;

void PutOctal(char* field, std::size_t width, std::uint64_t value) {
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t ParseOctal(const char* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i] != '\0' && field[i] != ' '; ++i) {
    if (field[i] < '0' || field[i] > '7') throw ParseError("tar: bad octal field");
    v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

unsigned Checksum(const char* header) {
  unsigned sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    const bool in_field = i >= 148 && i < 156;
    sum += in_field ? ' ' : static_cast<unsigned char>(header[i]);
  }
  return sum;
}

}  // namespace

std::string WriteTar(const std::vector<ArchiveEntry>& entries) {
  std::string out;
  for (const ArchiveEntry& e : entries) {
    if (e.name.empty() || e.name.size() >= 100) {
      throw InvalidInput("tar: entry name must be 1-99 bytes: '" + e.name + "'");
    }
    char h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    PutOctal(h + 100, 8, 0644);
    PutOctal(h + 108, 8, 0);
    PutOctal(h + 116, 8, 0);
    PutOctal(h + 124, 12, e.data.size());
    PutOctal(h + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    std::memcpy(h + 263, "00", 2);
    std::snprintf(h + 148, 8, "%06o", Checksum(h));
    h[155] = ' ';
    out.append(h, kBlock);
    out += e.data;
    out.append((kBlock - e.data.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<ArchiveEntry> ReadTar(std::string_view bytes, std::string_view source) {
  const std::string where(source);
  std::vector<ArchiveEntry> out;
  std::size_t pos = 0;
  while (true) {
    if (pos + kBlock > bytes.size()) throw ParseError(where + ": truncated tar archive");
    const char* h = bytes.data() + pos;
    bool zero = true;
    for (std::size_t i = 0; i < kBlock && zero; ++i) zero = h[i] == '\0';
    if (zero) break;
    if (ParseOctal(h + 148, 8) != Checksum(h)) {
      throw ParseError(where + ": tar header checksum mismatch at offset " + std::to_string(pos));
    }
    std::string name(h, strnlen(h, 100));
    const std::string prefix(h + 345, strnlen(h + 345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;
    const std::uint64_t size = ParseOctal(h + 124, 12);
    pos += kBlock;
    if (size > bytes.size() - pos) throw ParseError(where + ": truncated tar entry " + name);
    const char type = h[156];
    if (type == '0' || type == '\0') out.push_back({name, std::string(bytes.substr(pos, size))});
    pos += size + (kBlock - size % kBlock) % kBlock;
  }
  return out;
}

}  // namespace pbp
