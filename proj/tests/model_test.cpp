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

#include "pbp/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "pbp/annotator.h"
#include "pbp/archive.h"
#include "pbp/checkpoint.h"
#include "pbp/error.h"
#include "pbp/synthetic.h"
#include "pbp/util.h"
#include "model_fixtures.h"
#include "random_corpus.h"
#include "test_util.h"

namespace pbp {
namespace {

using testing::SmallSystem;
using testing::TinyLmDir;

std::vector<AnnotatedToken> Sequence(std::initializer_list<std::pair<std::string, Pos>> items) {
  std::vector<AnnotatedToken> out;
  for (const auto& [s, p] : items) out.push_back(MakeToken(s, p, -1, DepRel::kRoot));
  return out;
}

std::vector<Utterance> Synthetic(std::size_t n, std::uint64_t seed) {
  SyntheticCorpusOptions o;
  o.utterances = n;
  o.seed = seed;
  return MakeSyntheticCorpus(o);
}

std::unique_ptr<PhraseBreakModel> MakeModel(const SystemConfig& c, std::span<const Utterance> train,
                                            std::uint64_t seed = 1) {
  return PhraseBreakModel::Create(c, BuildVocabulary(train), seed);
}

TEST(SystemKindTest, NamesRoundTrip) {
  for (SystemKind k : kAllSystems) EXPECT_EQ(ParseSystemKind(SystemName(k)), k);
  EXPECT_EQ(SystemName(SystemKind::kBiLstmFeaturesPlusLm), "bilstm-features+lm");
  try {
    ParseSystemKind("crf");
    FAIL();
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bilstm-tokens+lm"), std::string::npos);
    EXPECT_NE(msg.find("rule-based"), std::string::npos);
  }
  EXPECT_TRUE(UsesLm(SystemKind::kLmOnly));
  EXPECT_FALSE(UsesBiLstm(SystemKind::kLmOnly));
  EXPECT_TRUE(UsesLinguisticFeatures(SystemKind::kBiLstmFeatures));
  EXPECT_FALSE(UsesLinguisticFeatures(SystemKind::kBiLstmTokensPlusLm));
}

TEST(SystemConfigTest, ForKindIsValidAndRoundTrips) {
  for (SystemKind k : kAllSystems) {
    const SystemConfig c = SystemConfig::ForKind(k, TinyLmDir());
    EXPECT_NO_THROW(c.Validate()) << SystemName(k);
    EXPECT_EQ(c.bilstm.has_value(), UsesBiLstm(k));
    EXPECT_EQ(c.lm.has_value(), UsesLm(k));
    EXPECT_EQ(SystemConfig::Parse(c.Serialize()), c);
  }
  const SystemConfig lm = SystemConfig::ForKind(SystemKind::kLmOnly, TinyLmDir());
  EXPECT_EQ(lm.lm->layer_count, 3u);
  EXPECT_EQ(lm.lm->hidden_dim, 16u);
  EXPECT_TRUE(lm.lm->finetune);
  EXPECT_EQ(lm.classifier_hidden, 256u);
  EXPECT_EQ(lm.decision_threshold, 0.5);
}

TEST(SystemConfigTest, InvariantsAreEnforced) {
  SystemConfig c = SystemConfig::ForKind(SystemKind::kBiLstmTokens);
  c.lm = LmEncoderConfig{};
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = SystemConfig::ForKind(SystemKind::kLmOnly);
  EXPECT_THROW(c.Validate(), InvalidInput);  // no checkpoint
  c = SystemConfig::ForKind(SystemKind::kBiLstmFeatures);
  c.bilstm.reset();
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = SystemConfig::ForKind(SystemKind::kBiLstmTokens);
  c.bilstm->use_pretrained_word_embeddings = true;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = SystemConfig::ForKind(SystemKind::kRuleBased);
  c.decision_threshold = 1.0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  EXPECT_THROW(SystemConfig::Parse("system=lm\nbogus=1\n"), ParseError);
  EXPECT_THROW(SystemConfig::Parse("classifier_hidden=3\n"), ParseError);
  EXPECT_THROW(SystemConfig::Parse("system=rule-based\nbilstm.layers=2\n"), ParseError);
}

TEST(RuleBasedTest, Examples) {
  const auto a = Sequence({{"今日", Pos::kNoun}, {"、", Pos::kPunct}, {"晴れ", Pos::kNoun},
                           {"。", Pos::kPunct}});
  EXPECT_EQ(RuleBasedPredict(a).labels, (std::vector<int>{0, 1, 0, 0}));
  const auto b = Sequence({{"今日", Pos::kNoun}, {"晴れ", Pos::kNoun}});
  EXPECT_EQ(RuleBasedPredict(b).labels, (std::vector<int>{0, 0}));
  const auto c = Sequence({{"、", Pos::kPunct}, {"「", Pos::kPunct}, {"。", Pos::kPunct}});
  EXPECT_EQ(RuleBasedPredict(c).labels, (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(RuleBasedPredict(c).probabilities, (std::vector<Scalar>{1.0, 1.0, 0.0}));
  EXPECT_TRUE(RuleBasedPredict({}).labels.empty());
}

TEST(RuleBasedTest, DependsOnlyOnPunctuationFlags) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Utterance u = testing::RandomUtterance(rng, "r");
    const auto before = RuleBasedPredict(u.tokens).labels;
    for (auto& t : u.tokens) {
      if (!t.is_punct) t.surface = testing::SampleSurfaces()[rng.Below(3)] + "x";
    }
    EXPECT_EQ(RuleBasedPredict(u.tokens).labels, before);
  }
}

TEST(LossTest, AnalyticCases) {
  EXPECT_LE(BreakLoss(std::vector<Scalar>{1.0, 0.0, 1.0}, std::vector<int>{1, 0, 1}), 1e-6);
  EXPECT_NEAR(BreakLoss(std::vector<Scalar>(7, 0.5), std::vector<int>{1, 0, 1, 1, 0, 0, 1}),
              std::log(2.0), 1e-12);
  EXPECT_NEAR(BreakLoss(std::vector<Scalar>{0.0}, std::vector<int>{1}), -std::log(1e-7), 1e-9);
  EXPECT_THROW(BreakLoss(std::vector<Scalar>{0.5}, std::vector<int>{1, 0}), ShapeError);
}

TEST(LossTest, RandomCasesMatchBruteForce) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + gen() % 20;
    std::vector<Scalar> p(n);
    std::vector<int> y(n);
    Scalar expect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = unit(gen);
      y[i] = static_cast<int>(gen() % 2);
      const Scalar q = std::min(std::max(p[i], 1e-7), 1.0 - 1e-7);
      expect += -(y[i] * std::log(q) + (1 - y[i]) * std::log(1.0 - q));
    }
    EXPECT_NEAR(BreakLoss(p, y), expect / n, 1e-12);
    EXPECT_GE(BreakLoss(p, y), 0.0);
  }
}

TEST(ModelTest, PredictionLengthMatchesTokensForEverySystem) {
  const auto corpus = testing::RandomCorpus(30, 5);
  for (SystemKind k : kAllSystems) {
    const auto model = MakeModel(SmallSystem(k), corpus);
    for (const Utterance& u : corpus) {
      const Prediction p = model->Predict(u);
      ASSERT_EQ(p.probabilities.size(), u.size()) << SystemName(k);
      ASSERT_EQ(p.labels.size(), u.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_GE(p.probabilities[i], 0.0);
        EXPECT_LE(p.probabilities[i], 1.0);
        EXPECT_EQ(p.labels[i], p.probabilities[i] >= 0.5 ? 1 : 0);
        if (k == SystemKind::kRuleBased) {
          EXPECT_TRUE(p.probabilities[i] == 0.0 || p.probabilities[i] == 1.0);
        }
      }
    }
  }
}

TEST(ModelTest, ClassifierInputWidth) {
  const auto corpus = Synthetic(5, 1);
  SystemConfig c = SystemConfig::ForKind(SystemKind::kBiLstmFeaturesPlusLm, TinyLmDir());
  c.bilstm->token_embedding_dim = 8;
  EXPECT_EQ(MakeModel(c, corpus)->classifier_input_dim(), 512u + 16u);
  EXPECT_EQ(MakeModel(SmallSystem(SystemKind::kLmOnly), corpus)->classifier_input_dim(), 16u);
  EXPECT_EQ(MakeModel(SmallSystem(SystemKind::kBiLstmTokens, 6), corpus)->classifier_input_dim(),
            12u);
  SystemConfig direct = SmallSystem(SystemKind::kBiLstmTokens);
  direct.classifier_hidden = 0;
  const auto m = MakeModel(direct, corpus);
  EXPECT_EQ(m->params().Find("classifier.hidden.weight"), nullptr);
  EXPECT_EQ(m->params().Get("classifier.output.weight").value.rows(), 12u);
}

TEST(ModelTest, DeterministicAndPaddingInvariant) {
  const auto corpus = testing::RandomCorpus(12, 6);
  for (SystemKind k : kAllSystems) {
    const auto model = MakeModel(SmallSystem(k), corpus);
    std::vector<const Utterance*> ptrs;
    for (const auto& u : corpus) ptrs.push_back(&u);
    const auto batched = model->PredictBatch(ptrs);
    const auto all = model->PredictAll(corpus, 5);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Prediction single = model->Predict(corpus[i]);
      EXPECT_EQ(single.probabilities, model->Predict(corpus[i]).probabilities);
      for (std::size_t t = 0; t < single.probabilities.size(); ++t) {
        EXPECT_NEAR(batched[i].probabilities[t], single.probabilities[t], 1e-12) << SystemName(k);
        EXPECT_NEAR(all[i].probabilities[t], single.probabilities[t], 1e-12);
      }
    }
  }
}

TEST(ModelTest, BatchLossIsTokenWeightedMeanOfUtteranceLosses) {
  const auto corpus = testing::RandomCorpus(7, 7);
  const auto model = MakeModel(SmallSystem(SystemKind::kBiLstmFeaturesPlusLm), corpus);
  std::vector<const Utterance*> ptrs;
  Scalar weighted = 0.0;
  std::size_t tokens = 0;
  for (const auto& u : corpus) {
    ptrs.push_back(&u);
    const Prediction p = model->Predict(u);
    weighted += BreakLoss(p.probabilities, *u.labels) * static_cast<Scalar>(u.size());
    tokens += u.size();
  }
  nn::Graph g;
  const Scalar batch_loss = model->Loss(g, model->MakeBatch(ptrs)).value()(0, 0);
  EXPECT_NEAR(batch_loss, weighted / static_cast<Scalar>(tokens), 1e-12);
}

TEST(ModelTest, LossGradientsMatchFiniteDifferences) {
  const auto corpus = testing::RandomCorpus(3, 8, true);
  for (SystemKind k : {SystemKind::kBiLstmFeatures, SystemKind::kBiLstmTokensPlusLm}) {
    SystemConfig c = SmallSystem(k, 3);
    const auto model = MakeModel(c, corpus, 8);
    std::vector<const Utterance*> ptrs;
    for (const auto& u : corpus) ptrs.push_back(&u);
    const ModelBatch batch = model->MakeBatch(ptrs);
    const auto result = testing::CheckGradients(
        model->params(), [&](nn::Graph& g) { return model->Loss(g, batch); }, 1e-4, 8);
    EXPECT_LT(result.worst_relative_error, 1e-3) << SystemName(k) << " " << result.worst_entry;
  }
}

TEST(ModelTest, MissingAnnotationsAreReported) {
  const auto corpus = Synthetic(3, 2);
  const auto model = MakeModel(SmallSystem(SystemKind::kBiLstmFeatures), corpus);
  Utterance empty{"e0", {}, std::nullopt};
  EXPECT_THROW(model->Predict(empty), AnnotationError);
  Utterance broken = corpus[0];
  broken.tokens[0].dep_head = 99;
  try {
    model->Predict(broken);
    FAIL();
  } catch (const AnnotationError& e) {
    EXPECT_NE(std::string(e.what()).find(broken.id), std::string::npos);
  }
  Utterance unlabeled = corpus[0];
  unlabeled.labels.reset();
  const Utterance* one[] = {&unlabeled};
  nn::Graph g;
  EXPECT_THROW(model->Loss(g, model->MakeBatch(one)), InvalidInput);
}

TEST(ModelTest, OverlengthUtteranceNamesItself) {
  const auto corpus = Synthetic(3, 2);
  const auto model = MakeModel(SmallSystem(SystemKind::kLmOnly), corpus);
  Utterance u{"long1", {}, std::nullopt};
  for (int i = 0; i < 80; ++i) u.tokens.push_back(MakeToken("猫", Pos::kNoun, -1, DepRel::kRoot));
  try {
    model->Predict(u);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("long1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("overlength"), std::string::npos);
  }
}

TEST(ModelTest, PretrainedWordVectorsFeedTheBiLstm) {
  const auto dir = testing::TempDir("vectors");
  WriteFileAtomic(dir / "vec.txt", "2 3\n今日 0.1 0.2 0.3\n雨 -1 0 1\n");
  const auto corpus = Synthetic(4, 3);
  SystemConfig c = SmallSystem(SystemKind::kBiLstmTokens);
  c.bilstm->use_pretrained_word_embeddings = true;
  c.embeddings_path = (dir / "vec.txt").string();
  const auto model = MakeModel(c, corpus);
  ASSERT_NE(model->embeddings(), nullptr);
  EXPECT_EQ(model->embeddings()->dimension(), 3u);
  EXPECT_FALSE(model->embeddings_fingerprint().empty());
  EXPECT_EQ(model->Predict(corpus[0]).labels.size(), corpus[0].size());
}

// ---------------------------------------------------------------------------
// Checkpoints

void ExpectSamePredictions(const PhraseBreakModel& a, const PhraseBreakModel& b,
                           std::span<const Utterance> corpus) {
  for (const Utterance& u : corpus) {
    EXPECT_EQ(a.Predict(u).probabilities, b.Predict(u).probabilities);
  }
}

TEST(CheckpointTest, RoundTripsEverySystem) {
  const auto corpus = Synthetic(6, 4);
  const auto dir = testing::TempDir("ckpt");
  for (SystemKind k : kAllSystems) {
    const auto model = MakeModel(SmallSystem(k), corpus, 11);
    for (nn::Parameter* p : model->params().All()) {
      for (Scalar& v : p->value.values()) v += 0.01;
    }
    const auto path = dir / (std::string(SystemName(k)) + ".ckpt");
    SaveCheckpoint(*model, path, "annot:1");
    const LoadedCheckpoint loaded = LoadCheckpoint(path, {"annot:1"});
    EXPECT_TRUE(loaded.warnings.empty());
    EXPECT_EQ(loaded.model->config(), model->config());
    EXPECT_EQ(loaded.fingerprints.annotator, "annot:1");
    EXPECT_EQ(loaded.model->vocabulary().words(), model->vocabulary().words());
    ExpectSamePredictions(*model, *loaded.model, corpus);
    EXPECT_EQ(SerializeCheckpoint(*loaded.model, "annot:1"), SerializeCheckpoint(*model, "annot:1"));
  }
}

TEST(CheckpointTest, ArchiveIsReadableByTar) {
  const auto corpus = Synthetic(3, 4);
  const auto model = MakeModel(SmallSystem(SystemKind::kBiLstmTokens), corpus);
  const auto dir = testing::TempDir("tar");
  SaveCheckpoint(*model, dir / "m.ckpt", "a");
  const std::string cmd = "cd '" + dir.string() + "' && tar -xf m.ckpt config.txt token_vocab.txt";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(ReadFile(dir / "config.txt"), model->config().Serialize());
  EXPECT_EQ(ReadFile(dir / "token_vocab.txt"), model->vocabulary().Serialize());
  const auto entries = ReadTar(ReadFile(dir / "m.ckpt"));
  ASSERT_GE(entries.size(), 5u);
  EXPECT_EQ(entries[1].name, "config.txt");
}

TEST(CheckpointTest, FrozenLmIsReferencedAndFingerprinted) {
  const auto corpus = Synthetic(4, 5);
  SystemConfig c = SmallSystem(SystemKind::kLmOnly);
  c.lm->finetune = false;
  const auto model = MakeModel(c, corpus);
  const auto dir = testing::TempDir("frozen");
  SaveCheckpoint(*model, dir / "m.ckpt", "a");
  const TensorFile params = ParseSafetensors(
      [&] {
        for (const auto& e : ReadTar(ReadFile(dir / "m.ckpt"))) {
          if (e.name == "params.safetensors") return e.data;
        }
        return std::string();
      }());
  for (const auto& [name, t] : params.tensors) EXPECT_FALSE(StartsWith(name, "lm.")) << name;
  EXPECT_TRUE(params.tensors.count("mix.weights"));
  ExpectSamePredictions(*model, *LoadCheckpoint(dir / "m.ckpt").model, corpus);

  // A different LM directory triggers a warning, or an error under strict.
  const auto other = dir / "lm";
  std::filesystem::create_directories(other);
  for (const char* f : {"config.json", "vocab.txt", "model.safetensors"}) {
    std::filesystem::copy_file(std::filesystem::path(TinyLmDir()) / f, other / f);
  }
  TensorFile weights = ReadSafetensors(other / "model.safetensors");
  weights.tensors["embeddings.LayerNorm.bias"].data[0] += 1.0;
  WriteFileAtomic(other / "model.safetensors", SerializeSafetensors(weights));
  CheckpointLoadOptions opts;
  opts.lm_dir = other.string();
  const LoadedCheckpoint warned = LoadCheckpoint(dir / "m.ckpt", opts);
  ASSERT_EQ(warned.warnings.size(), 1u);
  EXPECT_NE(warned.warnings[0].find("LM fingerprint mismatch"), std::string::npos);
  opts.strict = true;
  EXPECT_THROW(LoadCheckpoint(dir / "m.ckpt", opts), InvalidInput);
}

TEST(CheckpointTest, FinetunedLmIsSelfContained) {
  const auto corpus = Synthetic(4, 6);
  const auto model = MakeModel(SmallSystem(SystemKind::kBiLstmTokensPlusLm), corpus);
  for (nn::Parameter* p : model->params().All()) {
    if (StartsWith(p->name, "lm.")) p->value(0, 0) += 0.5;
  }
  const auto dir = testing::TempDir("finetuned");
  SaveCheckpoint(*model, dir / "m.ckpt", "a");
  CheckpointLoadOptions opts;
  opts.lm_dir = (dir / "does-not-exist").string();
  const LoadedCheckpoint loaded = LoadCheckpoint(dir / "m.ckpt", opts);
  ExpectSamePredictions(*model, *loaded.model, corpus);
  EXPECT_EQ(loaded.model->lm()->fingerprint(), model->lm()->fingerprint());
}

TEST(CheckpointTest, AnnotatorMismatchAndCorruption) {
  const auto corpus = Synthetic(3, 7);
  const auto model = MakeModel(SmallSystem(SystemKind::kBiLstmFeatures), corpus);
  const std::string bytes = SerializeCheckpoint(*model, LexiconAnnotator::Default().Fingerprint());
  CheckpointLoadOptions opts;
  opts.annotator_fingerprint = "command:deadbeef";
  EXPECT_EQ(ParseCheckpoint(bytes, opts).warnings.size(), 1u);
  opts.strict = true;
  EXPECT_THROW(ParseCheckpoint(bytes, opts), InvalidInput);
  std::string corrupt = bytes;
  corrupt[10] ^= 0x5a;
  EXPECT_THROW(ParseCheckpoint(corrupt, {}), ParseError);
  EXPECT_THROW(ParseCheckpoint(bytes.substr(0, 700), {}), ParseError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/ckpt"), IoError);
}

}  // namespace
}  // namespace pbp
