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

// Break-prediction scoring: outcome counts, precision/recall/F1 in percent,
// and the split into positions adjacent to punctuation and the rest.

#ifndef PBP_EVALUATOR_H_
#define PBP_EVALUATOR_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/corpus.h"
#include "pbp/lexfeat.h"

namespace pbp {

class PhraseBreakModel;

struct OutcomeCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;

  OutcomeCounts& operator+=(const OutcomeCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    return *this;
  }
  friend OutcomeCounts operator+(OutcomeCounts a, const OutcomeCounts& b) { return a += b; }
  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

// Percentages; any 0/0 ratio is reported as 0.
struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// True negatives are not counted.
OutcomeCounts CountOutcomes(std::span<const int> predicted, std::span<const int> gold);
Scores Prf(const OutcomeCounts& counts);
// One decimal, halves rounded away from zero.
double RoundHalfUp1(double value);
Scores Rounded(const Scores& s);

// A position is in the with-punctuation stratum when its token is
// punctuation or the next token is.
inline constexpr std::string_view kStratumDefinition =
    "with punctuation: the token is punctuation or is immediately followed by punctuation";
std::vector<bool> WithPunctuationPositions(std::span<const AnnotatedToken> tokens);

struct StratifiedCounts {
  OutcomeCounts overall;
  OutcomeCounts with_punct;
  OutcomeCounts without_punct;

  StratifiedCounts& operator+=(const StratifiedCounts& o) {
    overall += o.overall;
    with_punct += o.with_punct;
    without_punct += o.without_punct;
    return *this;
  }
  friend bool operator==(const StratifiedCounts&, const StratifiedCounts&) = default;
};

struct StratumResult {
  OutcomeCounts counts;
  Scores scores;  // unrounded
};

struct StratifiedReport {
  StratumResult overall;
  StratumResult with_punct;
  StratumResult without_punct;
  std::size_t utterances = 0;
  std::size_t tokens = 0;
};

StratifiedCounts StratifyCounts(std::span<const int> predicted, std::span<const int> gold,
                                std::span<const AnnotatedToken> tokens);
StratifiedReport MakeReport(const StratifiedCounts& counts);
StratifiedReport Stratify(std::span<const int> predicted, std::span<const int> gold,
                          std::span<const AnnotatedToken> tokens);

// Micro-averaged over utterances. Throws InvalidInput naming the first
// unlabeled or misaligned utterance.
StratifiedReport EvaluateLabels(std::span<const std::vector<int>> predicted,
                                std::span<const Utterance> gold);
StratifiedReport EvaluateSystem(const PhraseBreakModel& model, std::span<const Utterance> test);

// Table-style text: overall block, then the two strata side by side.
std::string FormatReport(const StratifiedReport& report, std::string_view system_name);
std::string ReportJson(const StratifiedReport& report, std::string_view system_name);

}  // namespace pbp

#endif  // PBP_EVALUATOR_H_
