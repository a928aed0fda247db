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
#include "pbp/lexfeat.h"

#include <array>
#include <sstream>

#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

constexpr std::array<std::string_view, kPosCount> kPosNames = {
    "ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
};

constexpr std::array<std::string_view, kDepRelCount> kDepRelNames = {
    "acl",        "advcl",     "advmod", "amod",     "appos",      "aux",
    "case",       "cc",        "ccomp",  "clf",      "compound",   "conj",
    "cop",        "csubj",     "dep",    "det",      "discourse",  "dislocated",
    "expl",       "fixed",     "flat",   "goeswith", "iobj",       "list",
    "mark",       "nmod",      "nsubj",  "nummod",   "obj",        "obl",
    "orphan",     "parataxis", "punct",  "reparandum", "root",     "vocative",
    "xcomp",
};

}  // namespace

std::string_view PosName(Pos pos) { return kPosNames[static_cast<int>(pos)]; }

std::optional<Pos> ParsePos(std::string_view name) {
  for (int i = 0; i < kPosCount; ++i) {
    if (kPosNames[i] == name) return static_cast<Pos>(i);
  }
  return std::nullopt;
}

std::string_view DepRelName(DepRel rel) {
  return kDepRelNames[static_cast<int>(rel)];
}

std::optional<DepRel> ParseDepRel(std::string_view name) {
  name = name.substr(0, name.find(':'));
  for (int i = 0; i < kDepRelCount; ++i) {
    if (kDepRelNames[i] == name) return static_cast<DepRel>(i);
  }
  return std::nullopt;
}

AnnotatedToken MakeToken(std::string surface, Pos pos, int dep_head,
                         DepRel rel) {
  AnnotatedToken t;
  t.surface = std::move(surface);
  t.pos = pos;
  t.dep_head = dep_head;
  t.dep_rel = rel;
  t.is_punct = IsPunctuationTag(pos);
  return t;
}

void ValidateDependencies(std::span<const AnnotatedToken> tokens) {
  const auto n = static_cast<int>(tokens.size());
  for (int i = 0; i < n; ++i) {
    const int h = tokens[i].dep_head;
    if (h < -1 || h >= n) {
      throw InvalidInput("token " + std::to_string(i) + " ('" +
                         tokens[i].surface + "') has dependency head " +
                         std::to_string(h) + " outside [-1, " +
                         std::to_string(n) + ")");
    }
  }
}

int HeadDistanceBucket(int index, int head) {
  if (head < 0) return 2;
  const int d = head - index;
  if (d == -1) return 1;
  if (d == 1) return 3;
  if (d >= -8 && d <= -2) return 0;
  if (d >= 2 && d <= 8) return 4;
  return 5;  // |d| > 8, or a self-loop in a malformed parse
}

// ---------------------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Matrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (vectors_.rows() != words_.size() + 1) {
    throw ShapeError("embedding table needs " + std::to_string(words_.size() + 1) +
                     " rows (vocabulary + unknown), got " +
                     std::to_string(vectors_.rows()));
  }
  if (vectors_.cols() == 0) throw ShapeError("embedding dimension must be > 0");
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
  std::fill(vectors_.row(unknown_row()),
            vectors_.row(unknown_row()) + vectors_.cols(), 0.0);
}

std::size_t EmbeddingTable::RowOf(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? unknown_row() : it->second;
}

EmbeddingTable ReadEmbeddingTable(const std::filesystem::path& path) {
  return ParseEmbeddingTable(ReadFile(path), path.string());
}

EmbeddingTable ParseEmbeddingTable(std::string_view text,
                                   std::string_view source) {
  const std::string where(source);
  std::vector<std::string> lines = Split(text, '\n');
  if (lines.empty() || Trim(lines[0]).empty()) {
    throw ParseError(where + ":1: missing '<vocab_size> <dimension>' header");
  }
  auto header = SplitWhitespace(lines[0]);
  std::optional<long long> vocab, dim;
  if (header.size() == 2) {
    vocab = ParseInt(header[0]);
    dim = ParseInt(header[1]);
  }
  if (!vocab || !dim || *vocab < 0 || *dim <= 0) {
    throw ParseError(where + ":1: malformed header '" + lines[0] + "'");
  }
  const auto d = static_cast<std::size_t>(*dim);
  std::vector<std::string> words;
  std::vector<Scalar> values;
  std::unordered_map<std::string, bool> seen;
  std::size_t rows_read = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (Trim(lines[ln]).empty()) continue;
    auto fields = SplitWhitespace(lines[ln]);
    if (fields.size() != d + 1) {
      throw ParseError(where + ":" + std::to_string(ln + 1) + ": expected " +
                       std::to_string(d + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    ++rows_read;
    if (seen.count(fields[0]) != 0) continue;
    seen.emplace(fields[0], true);
    words.push_back(fields[0]);
    for (std::size_t k = 1; k <= d; ++k) {
      auto v = ParseDouble(fields[k]);
      if (!v) {
        throw ParseError(where + ":" + std::to_string(ln + 1) +
                         ": not a number: '" + fields[k] + "'");
      }
      values.push_back(*v);
    }
  }
  if (rows_read != static_cast<std::size_t>(*vocab)) {
    throw ParseError(where + ": header announces " + std::to_string(*vocab) +
                     " words, file has " + std::to_string(rows_read));
  }
  values.resize(values.size() + d, 0.0);  // unknown-word row
  const std::size_t rows = words.size() + 1;
  return EmbeddingTable(std::move(words), Matrix(rows, d, std::move(values)));
}

std::string FormatEmbeddingTable(const EmbeddingTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << table.vocabulary_size() << ' ' << table.dimension() << '\n';
  for (std::size_t i = 0; i < table.vocabulary_size(); ++i) {
    out << table.words()[i];
    for (std::size_t c = 0; c < table.dimension(); ++c) {
      out << ' ' << table.vectors()(i, c);
    }
    out << '\n';
  }
  return out.str();
}

Matrix LookupEmbeddings(std::span<const AnnotatedToken> tokens,
                        const EmbeddingTable& table) {
  Matrix out(tokens.size(), table.dimension());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Scalar* src = table.vectors().row(table.RowOf(tokens[i].surface));
    std::copy(src, src + table.dimension(), out.row(i));
  }
  return out;
}

// ---------------------------------------------------------------------------

SubwordAlignment AlignSubwords(std::span<const AnnotatedToken> tokens,
                               std::span<const std::string> subwords) {
  std::string joined_tokens;
  std::vector<std::size_t> token_end;
  for (const auto& t : tokens) {
    joined_tokens += t.surface;
    token_end.push_back(joined_tokens.size());
  }
  std::string joined_subwords;
  std::vector<std::string_view> stripped;
  for (const auto& s : subwords) {
    std::string_view v = s;
    if (StartsWith(v, "##")) v.remove_prefix(2);
    stripped.push_back(v);
    joined_subwords += v;
  }
  if (joined_tokens != joined_subwords) {
    throw AlignmentError("subwords do not reconstruct the tokens: tokens '" +
                         joined_tokens + "' vs subwords '" + joined_subwords +
                         "'");
  }
  if (tokens.empty()) return {};

  SubwordAlignment out;
  out.spans.assign(tokens.size(), nn::Span{0, 0});
  std::vector<bool> started(tokens.size(), false);
  std::size_t offset = 0;
  std::size_t tok = 0;
  for (std::size_t j = 0; j < stripped.size(); ++j) {
    while (tok + 1 < tokens.size() && offset >= token_end[tok]) ++tok;
    const std::size_t len = stripped[j].size();
    if (offset + len > token_end[tok]) {
      throw AlignmentError("subword '" + subwords[j] +
                           "' straddles the boundary after token '" +
                           tokens[tok].surface + "' (tokens '" + joined_tokens +
                           "', subwords '" + joined_subwords + "')");
    }
    if (!started[tok]) {
      out.spans[tok].begin = j;
      started[tok] = true;
    }
    out.spans[tok].end = j + 1;
    offset += len;
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!started[i]) {
      throw AlignmentError("token " + std::to_string(i) + " ('" +
                           tokens[i].surface + "') received no subwords");
    }
  }
  return out;
}

}  // namespace pbp
