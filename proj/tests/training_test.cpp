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

#include "pbp/training.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "json.hpp"
#include "model_fixtures.h"
#include "pbp/error.h"
#include "pbp/evaluator.h"
#include "pbp/synthetic.h"
#include "random_corpus.h"
#include "stop_cases.h"

namespace pbp {
namespace {

using testing::SmallSystem;
using testing::StopCase;
using testing::StopCases;

TEST(TrainConfigTest, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.learning_rate, 1e-5);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.max_epochs, 20u);
  EXPECT_EQ(c.patience, 10u);
  EXPECT_EQ(c.decision_threshold, 0.5);
  EXPECT_EQ(c.clip_norm, 0.0);
  EXPECT_EQ(c.weight_decay, 0.0);
  EXPECT_NO_THROW(c.Validate());
}

TEST(TrainConfigTest, Invariants) {
  TrainConfig c;
  c.patience = 21;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = TrainConfig();
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = TrainConfig();
  c.learning_rate = 0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = TrainConfig();
  c.max_epochs = 0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = TrainConfig();
  c.patience = 20;
  EXPECT_NO_THROW(c.Validate());
}

// Scan of each prefix: best is the first maximum; stop once the epochs since
// it reach patience.
StopCase Simulate(const std::vector<double>& f1, std::size_t patience, std::size_t max_epochs) {
  StopCase out{f1, patience, max_epochs, 0, 0, false};
  for (std::size_t e = 1; e <= max_epochs; ++e) {
    const auto it = std::max_element(f1.begin(), f1.begin() + static_cast<long>(e));
    const auto best = static_cast<std::size_t>(it - f1.begin()) + 1;
    out.epochs_run = e;
    out.best_epoch = best;
    if (e - best >= patience && e < max_epochs) {
      out.stopped_early = true;
      break;
    }
  }
  return out;
}

TEST(EarlyStoppingTest, ConstructedSequencesAgreeWithPrefixScan) {
  const auto cases = StopCases();
  ASSERT_EQ(cases.size(), 20u);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const StopCase& c = cases[i];
    const StopCase sim = Simulate(c.f1, c.patience, c.max_epochs);
    EXPECT_EQ(sim.epochs_run, c.epochs_run) << "case " << i;
    EXPECT_EQ(sim.best_epoch, c.best_epoch) << "case " << i;
    EXPECT_EQ(sim.stopped_early, c.stopped_early) << "case " << i;
  }
}

TEST(EarlyStoppingTest, FirstSequence) {
  EarlyStopping s(3);
  EXPECT_TRUE(s.Update(80));
  EXPECT_TRUE(s.Update(82));
  EXPECT_FALSE(s.Update(82));
  EXPECT_FALSE(s.Update(82));
  EXPECT_FALSE(s.ShouldStop());
  EXPECT_FALSE(s.Update(82));
  EXPECT_TRUE(s.ShouldStop());
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_EQ(s.best_f1(), 82.0);
  EXPECT_THROW(EarlyStopping(0), InvalidInput);
}

std::vector<Utterance> TinyCorpus(std::size_t n = 4) {
  SyntheticCorpusOptions o;
  o.utterances = n;
  o.seed = 5;
  return MakeSyntheticCorpus(o);
}

TEST(TrainTest, InjectedSequencesStopAndRestoreBestEpoch) {
  const auto corpus = TinyCorpus();
  for (const StopCase& c : StopCases()) {
    auto model = PhraseBreakModel::Create(SmallSystem(SystemKind::kBiLstmTokens, 3),
                                          BuildVocabulary(corpus), 11);
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    tc.batch_size = 2;
    tc.max_epochs = c.max_epochs;
    tc.patience = c.patience;
    std::vector<std::vector<Matrix>> seen;
    auto scorer = [&](const PhraseBreakModel& m, std::size_t epoch) {
      std::vector<Matrix> values;
      for (const nn::Parameter* p : m.params().All()) values.push_back(p->value);
      seen.push_back(std::move(values));
      return c.f1.at(epoch - 1);
    };
    const TrainReport r = Train(*model, corpus, {}, tc, scorer);
    EXPECT_EQ(r.epochs.size(), c.epochs_run);
    EXPECT_EQ(r.best_epoch, c.best_epoch);
    EXPECT_EQ(r.stopped_early, c.stopped_early);
    double mx = -1;
    for (const auto& e : r.epochs) mx = std::max(mx, e.validation_f1);
    EXPECT_EQ(r.best_f1, mx);

    ASSERT_EQ(seen.size(), c.epochs_run);
    const auto params = model->params().All();
    for (std::size_t k = 0; k < params.size(); ++k) {
      EXPECT_EQ(params[k]->value, seen[c.best_epoch - 1][k]) << params[k]->name;
    }
    if (c.best_epoch != c.epochs_run) {
      EXPECT_NE(seen[c.best_epoch - 1], seen.back());
    }
  }
}

TEST(TrainTest, SingleEpoch) {
  const auto corpus = TinyCorpus();
  auto model = PhraseBreakModel::Create(SmallSystem(SystemKind::kBiLstmTokens, 3),
                                        BuildVocabulary(corpus), 1);
  TrainConfig tc;
  tc.max_epochs = 1;
  tc.patience = 1;
  const TrainReport r = Train(*model, corpus, corpus, tc);
  EXPECT_EQ(r.epochs.size(), 1u);
  EXPECT_FALSE(r.stopped_early);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_TRUE(std::isfinite(r.epochs[0].loss));
}

TEST(TrainTest, Preconditions) {
  const auto corpus = TinyCorpus();
  TrainConfig tc;
  CorpusSplit split;
  split.train = corpus;
  split.validation = corpus;
  EXPECT_THROW(TrainSystem(SmallSystem(SystemKind::kRuleBased), split, tc), InvalidInput);
  try {
    TrainSystem(SmallSystem(SystemKind::kRuleBased), split, tc);
  } catch (const InvalidInput& e) {
    EXPECT_STREQ(e.what(), "rule-based requires no training");
  }
  split.train.clear();
  EXPECT_THROW(TrainSystem(SmallSystem(SystemKind::kBiLstmTokens), split, tc), InvalidInput);
  split.train = corpus;
  split.train[1].labels.reset();
  EXPECT_THROW(TrainSystem(SmallSystem(SystemKind::kBiLstmTokens), split, tc), InvalidInput);
}

TEST(TrainTest, NonFiniteLossNamesEpochAndBatch) {
  const auto corpus = TinyCorpus();
  auto model = PhraseBreakModel::Create(SmallSystem(SystemKind::kBiLstmTokens, 3),
                                        BuildVocabulary(corpus), 1);
  model->params().Get("classifier.output.bias").value(0, 0) =
      std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.patience = 1;
  try {
    Train(*model, corpus, corpus, tc);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

TEST(TrainTest, SameSeedSameTrajectory) {
  const auto corpus = TinyCorpus(8);
  CorpusSplit split;
  split.train = corpus;
  split.validation = corpus;
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 3;
  tc.max_epochs = 3;
  tc.patience = 3;
  const auto a = TrainSystem(SmallSystem(SystemKind::kBiLstmTokens, 4), split, tc);
  const auto b = TrainSystem(SmallSystem(SystemKind::kBiLstmTokens, 4), split, tc);
  ASSERT_EQ(a.report.epochs.size(), b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    EXPECT_EQ(a.report.epochs[i].loss, b.report.epochs[i].loss);
    EXPECT_EQ(a.report.epochs[i].validation_f1, b.report.epochs[i].validation_f1);
  }
}

TEST(MakeBatchesTest, SizesAndOrder) {
  const auto b = MakeBatches(10, 4, 7, 1);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 4u);
  EXPECT_EQ(b[2].size(), 2u);
  EXPECT_EQ(MakeBatches(10, 4, 7, 1), b);
  EXPECT_NE(MakeBatches(10, 4, 7, 2), b);
  EXPECT_NE(MakeBatches(10, 4, 8, 1), b);
  EXPECT_TRUE(MakeBatches(0, 4, 7, 1).empty());
  EXPECT_THROW(MakeBatches(10, 0, 7, 1), InvalidInput);
}

TEST(MakeBatchesTest, ExactlyOnceCoverage) {
  for (std::size_t n : {1u, 5u, 17u, 64u, 130u}) {
    for (std::size_t bs = 1; bs <= 70; bs += 3) {
      for (std::size_t epoch = 1; epoch <= 3; ++epoch) {
        std::multiset<std::size_t> seen;
        for (const auto& batch : MakeBatches(n, bs, 3, epoch)) {
          EXPECT_LE(batch.size(), bs);
          EXPECT_FALSE(batch.empty());
          seen.insert(batch.begin(), batch.end());
        }
        ASSERT_EQ(seen.size(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen.count(i), 1u);
      }
    }
  }
}

TEST(AdamTest, MatchesClosedFormSteps) {
  nn::ParameterStore store;
  nn::Parameter& p = store.Add("w", Matrix{{1.0, -2.0}});
  Adam adam({&p}, 0.1);
  // Step 1: bias-corrected moments are g and g^2.
  p.grad = Matrix{{0.5, -4.0}};
  adam.Step();
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value(0, 1), -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-15);
  // Step 2 by hand.
  p.grad = Matrix{{1.0, 0.0}};
  const double before = p.value(0, 0);
  adam.Step();
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 1.0;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81);
  const double vhat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p.value(0, 0), before - 0.1 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
  EXPECT_EQ(adam.steps(), 2u);
}

TEST(AdamTest, MinimizesQuadratic) {
  nn::ParameterStore store;
  nn::Parameter& p = store.Add("w", Matrix{{3.0, -5.0, 0.5}});
  Adam adam({&p}, 0.05);
  for (int i = 0; i < 2000; ++i) {
    for (std::size_t j = 0; j < 3; ++j) p.grad(0, j) = 2.0 * (p.value(0, j) - 1.0);
    adam.Step();
  }
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.value(0, j), 1.0, 1e-3);
}

TEST(ClipTest, ScalesToMaxNorm) {
  nn::ParameterStore store;
  nn::Parameter& a = store.Add("a", Matrix{{0, 0}});
  nn::Parameter& b = store.Add("b", Matrix{{0}});
  a.grad = Matrix{{3, 0}};
  b.grad = Matrix{{4}};
  std::vector<nn::Parameter*> ps = {&a, &b};
  EXPECT_DOUBLE_EQ(ClipGradNorm(ps, 1.0), 5.0);
  EXPECT_NEAR(a.grad(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(b.grad(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(ClipGradNorm(ps, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(b.grad(0, 0), 0.8, 1e-15);
}

TEST(ReportTest, LinesAndJson) {
  TrainReport r;
  r.epochs = {{1, 0.5, 80.0, 1.25}, {2, 0.25, 82.5, 1.0}};
  r.best_epoch = 2;
  r.best_f1 = 82.5;
  EXPECT_EQ(r.Lines(),
            "epoch=1 loss=0.500000 val_f1=80.00 seconds=1.250\n"
            "epoch=2 loss=0.250000 val_f1=82.50 seconds=1.000\n");
  const auto j = nlohmann::json::parse(r.Json());
  EXPECT_EQ(j["best_epoch"], 2);
  EXPECT_EQ(j["epochs"].size(), 2u);
  EXPECT_EQ(j["epochs"][1]["val_f1"], 82.5);
  EXPECT_EQ(j["stopped_early"], false);
}

// Conjunction breaks carry no punctuation cue, so this needs the surface
// tokens to be learned.
TEST(TrainTest, OverfitsSmallSyntheticCorpus) {
  SyntheticCorpusOptions o;
  o.utterances = 50;
  o.seed = 21;
  const auto corpus = MakeSyntheticCorpus(o);
  SystemConfig sc = SmallSystem(SystemKind::kBiLstmTokens, 16);
  sc.bilstm->token_embedding_dim = 16;
  sc.classifier_hidden = 16;
  auto model = PhraseBreakModel::Create(sc, BuildVocabulary(corpus), 3);
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 10;
  tc.max_epochs = 200;
  tc.patience = 200;
  std::size_t first_reached = 0;
  const TrainReport r = Train(*model, corpus, {}, tc, [&](const PhraseBreakModel& m, std::size_t epoch) {
    const double f1 = ValidationF1(m, corpus, 0.5);
    if (f1 >= 99.0 && first_reached == 0) first_reached = epoch;
    return f1;
  });
  EXPECT_GT(first_reached, 0u);
  EXPECT_GE(r.best_f1, 99.0);
  EXPECT_GE(EvaluateSystem(*model, corpus).overall.scores.f1, 99.0);
  std::printf("training-set F1 >= 99 first at epoch %zu, best %.2f\n", first_reached, r.best_f1);
}

}  // namespace
}  // namespace pbp
