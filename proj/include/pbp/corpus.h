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
// Labeled utterances: break labels derived from word timings, the on-disk
// TSV corpus format, and seeded train/validation/test splits.
//
// Corpus TSV: UTF-8, LF line endings. Each utterance is a block opened by a
// "# id=<utterance-id>" comment line and closed by a blank line. Every other
// line is one token:
//
//   surface <TAB> POS <TAB> head <TAB> relation [<TAB> label]
//
// POS is a Universal POS tag, head is the 0-based index of the head token
// (-1 for the root), relation is a Universal Dependencies relation and label
// is 1 when a phrase break follows the token. Within a block either every
// token carries a label or none does.

#ifndef PBP_CORPUS_H_
#define PBP_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/lexfeat.h"

namespace pbp {

struct WordTiming {
  std::string surface;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

inline constexpr std::int64_t kDefaultBreakThresholdMs = 200;

struct Utterance {
  std::string id;
  std::vector<AnnotatedToken> tokens;
  // One label per token when present: 1 = a break follows the token.
  std::optional<std::vector<int>> labels;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Throws InvalidInput naming the utterance when labels are malformed or a
// dependency head is out of range.
void ValidateUtterance(const Utterance& u);

// label_i = 1 iff the silence between word i and word i+1 is strictly longer
// than threshold_ms; the final word is always 0.
std::vector<int> LabelFromAlignment(std::span<const WordTiming> timings,
                                    std::int64_t threshold_ms =
                                        kDefaultBreakThresholdMs);

std::vector<Utterance> ReadCorpus(const std::filesystem::path& path);
std::vector<Utterance> ParseCorpus(std::string_view text,
                                   std::string_view source = "<memory>");
std::string FormatCorpus(std::span<const Utterance> utterances);
void WriteCorpus(std::span<const Utterance> utterances,
                 const std::filesystem::path& path);

struct CorpusSplit {
  std::vector<Utterance> train;
  std::vector<Utterance> validation;
  std::vector<Utterance> test;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + validation + test; }
};

// Seeded random assignment; each part keeps the input order.
CorpusSplit SplitCorpus(std::span<const Utterance> utterances,
                        SplitSizes sizes, std::uint64_t seed);

// Time-aligned input for corpus construction. Same block layout as the
// corpus TSV, with token lines
//
//   surface <TAB> start_ms <TAB> end_ms [<TAB> POS <TAB> head <TAB> relation]
//
// Annotation columns are all-or-nothing within a block.
struct AlignedUtterance {
  std::string id;
  std::vector<WordTiming> timings;
  std::optional<std::vector<AnnotatedToken>> annotations;
};

std::vector<AlignedUtterance> ReadAlignment(const std::filesystem::path& path);
std::vector<AlignedUtterance> ParseAlignment(std::string_view text,
                                             std::string_view source =
                                                 "<memory>");

// True when the first token line of `text` has integer second and third
// columns, i.e. looks like an alignment file rather than a corpus.
bool LooksLikeAlignment(std::string_view text);

}  // namespace pbp

#endif  // PBP_CORPUS_H_
