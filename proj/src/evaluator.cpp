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

#include "pbp/evaluator.h"

#include <cmath>
#include <cstdio>
#include <cstdint>

#include "json.hpp"
#include "pbp/error.h"
#include "pbp/model.h"

namespace pbp {

namespace {

double Percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

void RequireSameLength(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " predictions for " +
                     std::to_string(b) + " gold labels");
  }
}

nlohmann::json StratumJson(const StratumResult& s) {
  const Scores r = Rounded(s.scores);
  return {{"tp", s.counts.tp},         {"fn", s.counts.fn},
          {"fp", s.counts.fp},         {"precision", r.precision},
          {"recall", r.recall},        {"f1", r.f1},
          {"precision_exact", s.scores.precision},
          {"recall_exact", s.scores.recall},
          {"f1_exact", s.scores.f1}};
}

std::string Fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", RoundHalfUp1(v));
  return buf;
}

}  // namespace

OutcomeCounts CountOutcomes(std::span<const int> predicted, std::span<const int> gold) {
  RequireSameLength(predicted.size(), gold.size(), "count_outcomes");
  OutcomeCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == 1 && gold[i] == 1) ++c.tp;
    else if (predicted[i] == 0 && gold[i] == 1) ++c.fn;
    else if (predicted[i] == 1 && gold[i] == 0) ++c.fp;
  }
  return c;
}

Scores Prf(const OutcomeCounts& c) {
  Scores s;
  s.precision = Percent(c.tp, c.tp + c.fp);
  s.recall = Percent(c.tp, c.tp + c.fn);
  const double sum = s.precision + s.recall;
  s.f1 = sum == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / sum;
  return s;
}

double RoundHalfUp1(double value) {
  // The relative nudge keeps decimal halves such as 92.45, stored slightly
  // below the true value, rounding up.
  const double scaled = value * 10.0;
  const double nudge = std::abs(scaled) * 1e-12;
  return value < 0 ? -std::floor(-scaled + 0.5 + nudge) / 10.0
                   : std::floor(scaled + 0.5 + nudge) / 10.0;
}

Scores Rounded(const Scores& s) {
  return {RoundHalfUp1(s.precision), RoundHalfUp1(s.recall), RoundHalfUp1(s.f1)};
}

std::vector<bool> WithPunctuationPositions(std::span<const AnnotatedToken> tokens) {
  std::vector<bool> out(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out[i] = tokens[i].is_punct || (i + 1 < tokens.size() && tokens[i + 1].is_punct);
  }
  return out;
}

StratifiedCounts StratifyCounts(std::span<const int> predicted, std::span<const int> gold,
                                std::span<const AnnotatedToken> tokens) {
  RequireSameLength(predicted.size(), gold.size(), "stratify");
  if (tokens.size() != gold.size()) {
    throw ShapeError("stratify: " + std::to_string(tokens.size()) + " tokens for " +
                     std::to_string(gold.size()) + " labels");
  }
  const std::vector<bool> with = WithPunctuationPositions(tokens);
  StratifiedCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int p[] = {predicted[i]};
    const int g[] = {gold[i]};
    const OutcomeCounts one = CountOutcomes(p, g);
    c.overall += one;
    (with[i] ? c.with_punct : c.without_punct) += one;
  }
  return c;
}

StratifiedReport MakeReport(const StratifiedCounts& c) {
  StratifiedReport r;
  r.overall = {c.overall, Prf(c.overall)};
  r.with_punct = {c.with_punct, Prf(c.with_punct)};
  r.without_punct = {c.without_punct, Prf(c.without_punct)};
  return r;
}

StratifiedReport Stratify(std::span<const int> predicted, std::span<const int> gold,
                          std::span<const AnnotatedToken> tokens) {
  StratifiedReport r = MakeReport(StratifyCounts(predicted, gold, tokens));
  r.utterances = 1;
  r.tokens = tokens.size();
  return r;
}

StratifiedReport EvaluateLabels(std::span<const std::vector<int>> predicted,
                                std::span<const Utterance> gold) {
  if (predicted.size() != gold.size()) {
    throw InvalidInput("evaluation: " + std::to_string(predicted.size()) +
                       " predicted utterances for " + std::to_string(gold.size()) + " gold");
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i].labels) throw InvalidInput("evaluation: utterance " + gold[i].id + " is unlabeled");
    if (predicted[i].size() != gold[i].size()) {
      throw InvalidInput("evaluation: utterance " + gold[i].id + " has " +
                         std::to_string(gold[i].size()) + " tokens but " +
                         std::to_string(predicted[i].size()) + " predictions");
    }
  }
  const auto n = static_cast<std::int64_t>(gold.size());
  std::vector<StratifiedCounts> parts(gold.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) {
    parts[i] = StratifyCounts(predicted[i], *gold[i].labels, gold[i].tokens);
  }
  StratifiedCounts total;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    total += parts[i];
    tokens += gold[i].size();
  }
  StratifiedReport r = MakeReport(total);
  r.utterances = gold.size();
  r.tokens = tokens;
  return r;
}

StratifiedReport EvaluateSystem(const PhraseBreakModel& model, std::span<const Utterance> test) {
  for (const Utterance& u : test) {
    if (!u.labels) throw InvalidInput("evaluation: utterance " + u.id + " is unlabeled");
  }
  const auto predictions = model.PredictAll(test);
  std::vector<std::vector<int>> labels;
  labels.reserve(predictions.size());
  for (const Prediction& p : predictions) labels.push_back(p.labels);
  return EvaluateLabels(labels, test);
}

std::string FormatReport(const StratifiedReport& r, std::string_view system_name) {
  std::string out;
  auto line = [&](const char* fmt, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  const std::string name(system_name);
  line("System: %s\nUtterances: %zu  Tokens: %zu\n\n", name.c_str(), r.utterances, r.tokens);
  line("%-22s %8s %8s %8s %7s %9s %7s\n", "", "TP", "FN", "FP", "F1", "Precision", "Recall");
  auto row = [&](const char* label, const StratumResult& s) {
    line("%-22s %8zu %8zu %8zu %7s %9s %7s\n", label, s.counts.tp, s.counts.fn, s.counts.fp,
         Fixed1(s.scores.f1).c_str(), Fixed1(s.scores.precision).c_str(),
         Fixed1(s.scores.recall).c_str());
  };
  row("Overall", r.overall);
  out += "\n";
  row("With punctuation", r.with_punct);
  row("Without punctuation", r.without_punct);
  out += "\nStratum rule: " + std::string(kStratumDefinition) + "\n";
  return out;
}

std::string ReportJson(const StratifiedReport& r, std::string_view system_name) {
  nlohmann::json j = {
      {"system", std::string(system_name)},
      {"utterances", r.utterances},
      {"tokens", r.tokens},
      {"stratum_definition", std::string(kStratumDefinition)},
      {"overall", StratumJson(r.overall)},
      {"with_punctuation", StratumJson(r.with_punct)},
      {"without_punctuation", StratumJson(r.without_punct)},
  };
  return j.dump(2) + "\n";
}

}  // namespace pbp
