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

// Minimal POSIX ustar archives of regular files, held in memory. Entries
// are written with fixed metadata so identical contents give identical
// bytes.

#ifndef PBP_ARCHIVE_H_
#define PBP_ARCHIVE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pbp {

struct ArchiveEntry {
  std::string name;  // at most 99 bytes
  std::string data;
};

std::string WriteTar(const std::vector<ArchiveEntry>& entries);
// Regular-file entries in archive order; other entry types are skipped.
std::vector<ArchiveEntry> ReadTar(std::string_view bytes, std::string_view source = "<memory>");

}  // namespace pbp

#endif  // PBP_ARCHIVE_H_
