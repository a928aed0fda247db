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
// Explicit linguistic inputs: annotated tokens over closed tag sets,
// dependency-distance buckets, pretrained word-embedding tables, and the
// alignment of language-model subwords onto word tokens.

#ifndef PBP_LEXFEAT_H_
#define PBP_LEXFEAT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbp/autograd.h"
#include "pbp/matrix.h"

namespace pbp {

// Universal POS tags.
enum class Pos {
  kAdj, kAdp, kAdv, kAux, kCconj, kDet, kIntj, kNoun, kNum, kPart, kPron,
  kPropn, kPunct, kSconj, kSym, kVerb, kX,
};
inline constexpr int kPosCount = 17;

// Universal dependency relations (subtypes are folded into their base).
enum class DepRel {
  kAcl, kAdvcl, kAdvmod, kAmod, kAppos, kAux, kCase, kCc, kCcomp, kClf,
  kCompound, kConj, kCop, kCsubj, kDep, kDet, kDiscourse, kDislocated,
  kExpl, kFixed, kFlat, kGoeswith, kIobj, kList, kMark, kNmod, kNsubj,
  kNummod, kObj, kObl, kOrphan, kParataxis, kPunct, kReparandum, kRoot,
  kVocative, kXcomp,
};
inline constexpr int kDepRelCount = 37;

std::string_view PosName(Pos pos);
std::optional<Pos> ParsePos(std::string_view name);
std::string_view DepRelName(DepRel rel);
// Accepts "rel" or "rel:subtype".
std::optional<DepRel> ParseDepRel(std::string_view name);
// Punctuation is a category of the POS tag set.
inline bool IsPunctuationTag(Pos pos) { return pos == Pos::kPunct; }

struct AnnotatedToken {
  std::string surface;
  Pos pos = Pos::kX;
  int dep_head = -1;  // 0-based token index, -1 for the root
  DepRel dep_rel = DepRel::kDep;
  bool is_punct = false;
  nn::Span subword_span{0, 0};  // filled in by subword alignment

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

// Builds a token whose is_punct flag follows from its tag.
AnnotatedToken MakeToken(std::string surface, Pos pos, int dep_head,
                         DepRel rel);

// Throws InvalidInput unless every dep_head lies in [-1, tokens.size()).
void ValidateDependencies(std::span<const AnnotatedToken> tokens);

// Signed head-distance buckets: [-8,-2], -1, root, +1, [+2,+8], beyond.
inline constexpr int kHeadDistanceBuckets = 6;
int HeadDistanceBucket(int index, int head);

// Pretrained word vectors. Row vocabulary.size() is the reserved
// unknown-word row, all zeros.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> words, Matrix vectors);

  std::size_t dimension() const { return vectors_.cols(); }
  std::size_t vocabulary_size() const { return words_.size(); }
  std::size_t unknown_row() const { return words_.size(); }
  // Row index for a surface; unknown_row() when out of vocabulary.
  std::size_t RowOf(std::string_view surface) const;
  const Matrix& vectors() const { return vectors_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix vectors_;  // (vocabulary + 1) x dimension
};

// Plain-text word-vector format: "<vocab_size> <dimension>" header, then
// one "surface v1 ... vd" line per word. Repeated surfaces keep the first
// vector.
EmbeddingTable ReadEmbeddingTable(const std::filesystem::path& path);
EmbeddingTable ParseEmbeddingTable(std::string_view text,
                                   std::string_view source = "<memory>");
std::string FormatEmbeddingTable(const EmbeddingTable& table);

// token_count x dimension; out-of-vocabulary surfaces map to the zero row.
Matrix LookupEmbeddings(std::span<const AnnotatedToken> tokens,
                        const EmbeddingTable& table);

struct SubwordAlignment {
  std::vector<nn::Span> spans;  // one per word token
};

// Aligns subword surfaces to tokens by character reconstruction. A leading
// "##" continuation marker is stripped from each subword before matching.
// Throws AlignmentError naming both strings when the concatenations differ
// or a subword straddles a token boundary.
SubwordAlignment AlignSubwords(std::span<const AnnotatedToken> tokens,
                               std::span<const std::string> subwords);

}  // namespace pbp

#endif  // PBP_LEXFEAT_H_
