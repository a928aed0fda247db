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

#include "pbp/synthetic.h"

#include <span>
#include <string_view>

#include "pbp/annotator.h"
#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

struct Entry {
  std::string_view surface;
  Pos pos;
};

constexpr Entry kNouns[] = {
    {"今日", Pos::kNoun}, {"明日", Pos::kNoun}, {"天気", Pos::kNoun},
    {"雨", Pos::kNoun},   {"学校", Pos::kNoun}, {"先生", Pos::kNoun},
    {"学生", Pos::kNoun}, {"映画", Pos::kNoun}, {"本", Pos::kNoun},
    {"駅", Pos::kNoun},   {"友達", Pos::kNoun}, {"電車", Pos::kNoun},
    {"会社", Pos::kNoun}, {"公園", Pos::kNoun}, {"料理", Pos::kNoun},
    {"音楽", Pos::kNoun}, {"手紙", Pos::kNoun}, {"部屋", Pos::kNoun},
    {"写真", Pos::kNoun}, {"猫", Pos::kNoun},   {"花", Pos::kNoun},
    {"海", Pos::kNoun},   {"仕事", Pos::kNoun}, {"東京", Pos::kPropn},
    {"大阪", Pos::kPropn}, {"私", Pos::kPron},  {"彼", Pos::kPron},
};
constexpr std::string_view kTopic = "は";
constexpr std::string_view kParticles[] = {"が", "を", "に", "で", "と", "へ", "も"};
constexpr std::string_view kVerbs[] = {"行く", "見る", "読む", "書く", "話す", "聞く",
                                       "買う", "作る", "待つ", "帰る", "会う", "歩く"};
constexpr std::string_view kAuxiliaries[] = {"ます", "た", "ない"};
constexpr std::string_view kConjunctions[] = {"そして", "しかし", "また", "だから", "それから"};

template <typename T, std::size_t N>
const T& Pick(Rng& rng, const T (&items)[N]) {
  return items[rng.Below(N)];
}

}  // namespace

std::vector<Utterance> MakeSyntheticCorpus(const SyntheticCorpusOptions& options) {
  if (options.max_clauses == 0 || options.max_chunks == 0) {
    throw InvalidInput("synthetic corpus: clause and chunk limits must be positive");
  }
  Rng rng(options.seed);
  std::vector<Utterance> out;
  out.reserve(options.utterances);
  for (std::size_t n = 0; n < options.utterances; ++n) {
    std::vector<AnnotatedToken> tokens;
    std::vector<int> labels;
    auto push = [&](std::string_view surface, Pos pos, int label) {
      tokens.push_back(MakeToken(std::string(surface), pos, -1, DepRel::kDep));
      labels.push_back(label);
    };
    const std::size_t clauses = 1 + rng.Below(options.max_clauses);
    for (std::size_t c = 0; c < clauses; ++c) {
      const std::size_t chunks = 1 + rng.Below(options.max_chunks);
      for (std::size_t k = 0; k < chunks; ++k) {
        const bool after_break = !labels.empty() && labels.back() == 1;
        if (!after_break && rng.Bernoulli(options.conjunction_rate)) {
          push(Pick(rng, kConjunctions), Pos::kCconj, 1);
        }
        const Entry& noun = Pick(rng, kNouns);
        push(noun.surface, noun.pos, 0);
        if (k == 0) {
          push(kTopic, Pos::kAdp, 0);
          if (rng.Bernoulli(options.topic_comma_rate)) push("、", Pos::kPunct, 1);
        } else {
          push(Pick(rng, kParticles), Pos::kAdp, 0);
        }
      }
      push(Pick(rng, kVerbs), Pos::kVerb, 0);
      if (rng.Bernoulli(0.5)) push(Pick(rng, kAuxiliaries), Pos::kAux, 0);
      if (c + 1 < clauses) push("、", Pos::kPunct, 1);
    }
    push("。", Pos::kPunct, 0);
    AssignHeuristicDependencies(tokens);
    Utterance u;
    u.id = options.id_prefix + std::to_string(n);
    u.tokens = std::move(tokens);
    u.labels = std::move(labels);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<std::string> SyntheticSurfaces() {
  std::vector<std::string> out;
  for (const Entry& e : kNouns) out.emplace_back(e.surface);
  out.emplace_back(kTopic);
  for (auto s : kParticles) out.emplace_back(s);
  for (auto s : kVerbs) out.emplace_back(s);
  for (auto s : kAuxiliaries) out.emplace_back(s);
  for (auto s : kConjunctions) out.emplace_back(s);
  out.emplace_back("、");
  out.emplace_back("。");
  return out;
}

}  // namespace pbp
