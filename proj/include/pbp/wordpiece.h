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

// Greedy longest-match-first WordPiece over pre-segmented words, using the
// vocab.txt format shared by BERT checkpoints (one piece per line, line
// number = id, "##" marks a word-internal continuation).

#ifndef PBP_WORDPIECE_H_
#define PBP_WORDPIECE_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pbp {

struct WordPiece {
  int id;
  std::string text;  // vocabulary entry, or the whole word for [UNK]
};

class WordPieceTokenizer {
 public:
  WordPieceTokenizer() = default;
  explicit WordPieceTokenizer(std::vector<std::string> vocab, bool lower_case = false);
  static WordPieceTokenizer FromVocabFile(const std::filesystem::path& path,
                                          bool lower_case = false);

  // A word with no complete decomposition becomes a single [UNK] piece.
  std::vector<WordPiece> TokenizeWord(std::string_view word) const;

  // Pieces of all words in order, plus their texts for subword alignment.
  struct Encoding {
    std::vector<int> ids;
    std::vector<std::string> texts;
  };
  Encoding Encode(std::span<const std::string> words) const;

  int IdOf(std::string_view piece) const;  // -1 when absent
  const std::string& PieceOf(int id) const { return vocab_.at(id); }
  std::size_t vocab_size() const { return vocab_.size(); }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool lower_case_ = false;
  int unk_id_ = -1;
  int cls_id_ = -1;
  int sep_id_ = -1;
};

}  // namespace pbp

#endif  // PBP_WORDPIECE_H_
