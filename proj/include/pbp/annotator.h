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

// Annotator adapters: tokenization, POS tagging and dependency parsing
// behind one interface. The built-in LexiconAnnotator is a deterministic
// dictionary segmenter with a head-final attachment heuristic; production
// corpora are expected to come pre-annotated, or through CommandAnnotator
// wrapping an external analyzer.

#ifndef PBP_ANNOTATOR_H_
#define PBP_ANNOTATOR_H_

#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbp/lexfeat.h"

namespace pbp {

class Annotator {
 public:
  virtual ~Annotator() = default;

  // Tokenizes, tags and parses a normalized sentence.
  virtual std::vector<AnnotatedToken> Annotate(std::string_view text) const = 0;
  // Tags and parses an already tokenized sentence, keeping its tokens.
  virtual std::vector<AnnotatedToken> AnnotateTokens(
      std::span<const std::string> surfaces) const = 0;
  // Name, version and configuration hash; stored in checkpoints.
  virtual std::string Fingerprint() const = 0;
};

// Runs `annotator` and checks the result. Failures, including empty input,
// surface as AnnotationError carrying `sentence_id`.
std::vector<AnnotatedToken> Annotate(std::string_view text,
                                     const Annotator& annotator,
                                     std::string_view sentence_id = "");

// Head-final attachment: function words (particles, auxiliaries,
// punctuation, conjunctions) attach to the preceding content word, content
// words to the next content word, and the last content word is the root.
void AssignHeuristicDependencies(std::vector<AnnotatedToken>& tokens);

class LexiconAnnotator : public Annotator {
 public:
  static constexpr std::string_view kName = "lexicon-heuristic";
  static constexpr int kVersion = 1;

  explicit LexiconAnnotator(std::unordered_map<std::string, Pos> lexicon);

  // Built-in lexicon of common Japanese function words and a small set of
  // content words.
  static const LexiconAnnotator& Default();
  // "surface<TAB>POS" per line, merged over the built-in lexicon.
  static LexiconAnnotator FromFile(const std::filesystem::path& path);

  std::vector<AnnotatedToken> Annotate(std::string_view text) const override;
  std::vector<AnnotatedToken> AnnotateTokens(
      std::span<const std::string> surfaces) const override;
  std::string Fingerprint() const override { return fingerprint_; }

  const std::unordered_map<std::string, Pos>& lexicon() const { return lexicon_; }

 private:
  Pos TagUnknown(std::string_view surface) const;

  std::unordered_map<std::string, Pos> lexicon_;
  std::size_t max_entry_chars_ = 1;
  std::string fingerprint_;
};

// Runs an external command through /bin/sh with the sentence on stdin. The
// command prints one token per line as "surface<TAB>POS<TAB>head<TAB>rel"
// (the corpus TSV annotation columns). Calls are serialized.
class CommandAnnotator : public Annotator {
 public:
  explicit CommandAnnotator(std::string command);

  std::vector<AnnotatedToken> Annotate(std::string_view text) const override;
  // Annotates the joined surfaces and requires the same tokenization back.
  std::vector<AnnotatedToken> AnnotateTokens(
      std::span<const std::string> surfaces) const override;
  std::string Fingerprint() const override;

 private:
  std::string command_;
  mutable std::mutex mu_;
};

}  // namespace pbp

#endif  // PBP_ANNOTATOR_H_
