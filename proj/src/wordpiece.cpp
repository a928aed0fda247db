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

#include "pbp/wordpiece.h"

#include <algorithm>

#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

constexpr std::size_t kMaxCharsPerWord = 100;

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  });
  return out;
}

}  // namespace

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab, bool lower_case)
    : vocab_(std::move(vocab)), lower_case_(lower_case) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<int>(i));
  }
  unk_id_ = IdOf("[UNK]");
  cls_id_ = IdOf("[CLS]");
  sep_id_ = IdOf("[SEP]");
  if (unk_id_ < 0 || cls_id_ < 0 || sep_id_ < 0) {
    throw InvalidInput("wordpiece vocabulary lacks [UNK], [CLS] or [SEP]");
  }
}

WordPieceTokenizer WordPieceTokenizer::FromVocabFile(const std::filesystem::path& path,
                                                     bool lower_case) {
  const std::string text = ReadFile(path);
  std::vector<std::string> vocab;
  for (std::string_view line : Split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    vocab.emplace_back(line);
  }
  while (!vocab.empty() && vocab.back().empty()) vocab.pop_back();
  return WordPieceTokenizer(std::move(vocab), lower_case);
}

int WordPieceTokenizer::IdOf(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

std::vector<WordPiece> WordPieceTokenizer::TokenizeWord(std::string_view word) const {
  const std::string key = lower_case_ ? AsciiLower(word) : std::string(word);
  const auto chars = DecodeUtf8(key);
  std::vector<WordPiece> out;
  if (chars.empty()) return out;
  if (chars.size() <= kMaxCharsPerWord) {
    std::size_t start = 0;
    while (start < chars.size()) {
      int found = -1;
      std::size_t end = chars.size();
      for (; end > start; --end) {
        const std::size_t b = chars[start].offset;
        const std::size_t e = chars[end - 1].offset + chars[end - 1].length;
        std::string piece = key.substr(b, e - b);
        if (start > 0) piece = "##" + piece;
        found = IdOf(piece);
        if (found >= 0) break;
      }
      if (found < 0) {
        out.clear();
        break;
      }
      out.push_back({found, vocab_[found]});
      start = end;
    }
    if (!out.empty()) return out;
  }
  return {{unk_id_, std::string(word)}};
}

WordPieceTokenizer::Encoding WordPieceTokenizer::Encode(
    std::span<const std::string> words) const {
  Encoding enc;
  for (const std::string& w : words) {
    for (WordPiece& p : TokenizeWord(w)) {
      enc.ids.push_back(p.id);
      enc.texts.push_back(std::move(p.text));
    }
  }
  return enc;
}

}  // namespace pbp
