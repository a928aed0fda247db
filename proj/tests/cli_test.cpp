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

#include "pbp/cli.h"

#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "model_fixtures.h"
#include "pbp/checkpoint.h"
#include "pbp/error.h"
#include "pbp/evaluator.h"
#include "pbp/synthetic.h"
#include "pbp/training.h"
#include "pbp/util.h"

namespace pbp {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  WriteFileAtomic(p, text);
  return p.string();
}

TEST(MarkupTest, RuleBasedExample) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "in.txt", "今日は、晴れ。\n");
  const CliRun r = Cli({"predict", "--system", "rule-based", "--in", in});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "今日 は 、<pause/> 晴れ 。\n");
}

TEST(MarkupTest, FinalTokenNeverMarked) {
  const std::vector<AnnotatedToken> t = {MakeToken("a", Pos::kNoun, -1, DepRel::kRoot),
                                         MakeToken("b", Pos::kNoun, 0, DepRel::kDep)};
  EXPECT_EQ(FormatMarkup(t, std::vector<int>{1, 1}), "a<pause/> b");
  EXPECT_EQ(FormatMarkup(t, std::vector<int>{0, 0}), "a b");
  EXPECT_THROW(FormatMarkup(t, std::vector<int>{0}), ShapeError);
}

TEST(PredictTest, EmptyInputGivesEmptyOutput) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "empty.txt", "");
  const CliRun r = Cli({"predict", "--system", "rule-based", "--in", in});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");
}

TEST(PredictTest, TsvKeepsInputColumns) {
  const fs::path dir = testing::TempDir("cli");
  const std::string text =
      "# id=a\n今日\tNOUN\t-1\troot\t0\nは\tADP\t0\tcase\t1\n、\tPUNCT\t0\tpunct\t1\n"
      "晴れ\tNOUN\t0\tobl\t0\n。\tPUNCT\t3\tpunct\t0\n\n";
  const std::string in = Write(dir, "gold.tsv", text);
  const CliRun r = Cli({"predict", "--system", "rule-based", "--in", in, "--format", "tsv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto in_lines = Split(text, '\n');
  const auto out_lines = Split(r.out, '\n');
  ASSERT_EQ(in_lines.size(), out_lines.size());
  const std::vector<std::string> expected_pred = {"", "0", "0", "1", "0", "0", "", ""};
  for (std::size_t i = 0; i < in_lines.size(); ++i) {
    if (expected_pred[i].empty()) {
      EXPECT_EQ(out_lines[i], in_lines[i]);
    } else {
      EXPECT_EQ(out_lines[i], in_lines[i] + "\t" + expected_pred[i]);
    }
  }
}

TEST(PredictTest, RawTextTsvOutputIsACorpusWithPredictions) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "in.txt", "今日は、晴れ。\n");
  const CliRun r = Cli({"predict", "--system", "rule-based", "--in", in, "--format", "tsv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto preds = ParsePredictions(r.out);
  ASSERT_EQ(preds.size(), 1u);
  EXPECT_EQ(preds[0].labels, (std::vector<int>{0, 0, 1, 0, 0}));
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({"predict", "--system", "rule-based", "--in", "/nonexistent/x"}).code, 2);
  EXPECT_EQ(Cli({}).code, 2);
  EXPECT_EQ(Cli({"frobnicate"}).code, 2);
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "in.txt", "今日は。\n");
  EXPECT_EQ(Cli({"predict", "--system", "rule-based", "--in", in, "--bogus"}).code, 2);
  EXPECT_EQ(Cli({"predict", "--system", "rule-based", "--in", in, "--format", "xml"}).code, 2);
  EXPECT_EQ(Cli({"predict", "--in", in}).code, 2);
  EXPECT_EQ(Cli({"--help"}).code, 0);
}

TEST(CorpusCmdTest, AlignmentLabelsAndThreshold) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "align.tsv",
                               "# id=u1\n今日\t0\t400\nは\t550\t700\n晴れ\t1000\t1300\n\n");
  const std::string out = (dir / "c").string();
  CliRun r = Cli({"corpus", "--in", in, "--out", out, "--split", "1,0,0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("utterances 1"), std::string::npos);
  auto corpus = ReadCorpus(fs::path(out) / "corpus.tsv");
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(*corpus[0].labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ReadCorpus(fs::path(out) / "train.tsv"), corpus);
  const auto manifest = nlohmann::json::parse(ReadFile(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest["train"][0], "u1");
  EXPECT_FALSE(manifest["annotator"].get<std::string>().empty());

  r = Cli({"corpus", "--in", in, "--out", out, "--split", "1,0,0", "--threshold-ms", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  corpus = ReadCorpus(fs::path(out) / "corpus.tsv");
  EXPECT_EQ(*corpus[0].labels, (std::vector<int>{1, 1, 0}));
}

TEST(CorpusCmdTest, TwoWordUtterance) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "align.tsv", "# id=x\n雨\t0\t200\nだ\t500\t600\n\n");
  const std::string out = (dir / "c").string();
  ASSERT_EQ(Cli({"corpus", "--in", in, "--out", out, "--split", "0,0,1"}).code, 0);
  const auto test = ReadCorpus(fs::path(out) / "test.tsv");
  ASSERT_EQ(test.size(), 1u);
  EXPECT_EQ(*test[0].labels, (std::vector<int>{1, 0}));
}

TEST(CorpusCmdTest, SplitMustMatchCorpus) {
  const fs::path dir = testing::TempDir("cli");
  SyntheticCorpusOptions o;
  o.utterances = 20;
  WriteCorpus(MakeSyntheticCorpus(o), dir / "syn.tsv");
  const std::string in = (dir / "syn.tsv").string();
  EXPECT_EQ(Cli({"corpus", "--in", in, "--out", (dir / "c").string()}).code, 1);
  const CliRun r = Cli({"corpus", "--in", in, "--out", (dir / "c").string(), "--split", "0.8,0.1,0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("split 16/2/2"), std::string::npos) << r.out;
}

TEST(TrainCmdTest, RejectsRuleBasedAndUnknownSystems) {
  const fs::path dir = testing::TempDir("cli");
  CliRun r = Cli({"train", "--system", "rule-based", "--out", (dir / "m").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("rule-based requires no training"), std::string::npos);
  r = Cli({"train", "--system", "nope", "--out", (dir / "m").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("bilstm-features+lm"), std::string::npos) << r.err;
  r = Cli({"train", "--system", "lm", "--out", (dir / "m").string()});
  EXPECT_NE(r.err.find("--lm"), std::string::npos) << r.err;
}

std::vector<std::string> SmallTrainArgs(const fs::path& corpus_dir, const fs::path& out) {
  return {"train",      "--system",    "bilstm-tokens",      "--corpus",     corpus_dir.string(),
          "--out",      out.string(),  "--hidden",           "6",            "--token-dim",
          "6",          "--classifier-hidden", "6",          "--lr",         "5e-3",
          "--batch-size", "8",         "--max-epochs",       "4",            "--patience",
          "2",          "--seed",      "9"};
}

fs::path SyntheticCorpusDir(const fs::path& dir) {
  SyntheticCorpusOptions o;
  o.utterances = 60;
  o.seed = 4;
  WriteCorpus(MakeSyntheticCorpus(o), dir / "syn.tsv");
  const fs::path cdir = dir / "corpus";
  const CliRun r = Cli({"corpus", "--in", (dir / "syn.tsv").string(), "--out", cdir.string(),
                     "--split", "40,10,10", "--seed", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  return cdir;
}

TEST(TrainCmdTest, SmokeRunIsRepeatableAndPipelineIsConsistent) {
  const fs::path dir = testing::TempDir("cli");
  const fs::path cdir = SyntheticCorpusDir(dir);
  const CliRun a = Cli(SmallTrainArgs(cdir, dir / "m1"));
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = Cli(SmallTrainArgs(cdir, dir / "m2"));
  ASSERT_EQ(b.code, 0) << b.err;
  ASSERT_TRUE(fs::exists(dir / "m1" / "model.ckpt"));
  const auto ja = nlohmann::json::parse(ReadFile(dir / "m1" / "report.json"));
  const auto jb = nlohmann::json::parse(ReadFile(dir / "m2" / "report.json"));
  EXPECT_EQ(ja["epochs"].size(), jb["epochs"].size());
  EXPECT_EQ(ja["best_epoch"], jb["best_epoch"]);
  for (std::size_t i = 0; i < ja["epochs"].size(); ++i) {
    EXPECT_EQ(ja["epochs"][i]["loss"], jb["epochs"][i]["loss"]);
  }
  EXPECT_EQ(ReadFile(dir / "m1" / "model.ckpt"), ReadFile(dir / "m2" / "model.ckpt"));

  // predict then eval equals evaluating the loaded model directly.
  const std::string gold = (cdir / "test.tsv").string();
  const std::string ckpt = (dir / "m1" / "model.ckpt").string();
  const std::string pred = (dir / "pred.tsv").string();
  ASSERT_EQ(Cli({"predict", "--checkpoint", ckpt, "--in", gold, "--format", "tsv", "--out", pred})
                .code,
            0);
  const std::string json = (dir / "report.json").string();
  const CliRun e = Cli({"eval", "--pred", pred, "--gold", gold, "--out", json});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto loaded = LoadCheckpoint(ckpt);
  const StratifiedReport direct = EvaluateSystem(*loaded.model, ReadCorpus(gold));
  const auto j = nlohmann::json::parse(ReadFile(json));
  EXPECT_EQ(j, nlohmann::json::parse(ReportJson(direct, "pred.tsv")));

  const CliRun e2 = Cli({"eval", "--checkpoint", ckpt, "--gold", gold, "--name", "pred.tsv"});
  EXPECT_EQ(e2.out, e.out);
}

TEST(EvalCmdTest, PerfectZeroAndMisaligned) {
  const fs::path dir = testing::TempDir("cli");
  SyntheticCorpusOptions o;
  o.utterances = 15;
  const auto corpus = MakeSyntheticCorpus(o);
  const std::string gold = (dir / "gold.tsv").string();
  WriteCorpus(corpus, gold);

  // Gold labels repeated as the prediction column.
  std::string perfect;
  std::string zeros;
  for (const std::string& line : Split(FormatCorpus(corpus), '\n')) {
    const bool token = !line.empty() && line[0] != '#';
    perfect += line + (token ? "\t" + Split(line, '\t').back() : "") + "\n";
    zeros += line + (token ? "\t0" : "") + "\n";
  }
  const std::string p1 = Write(dir, "perfect.tsv", perfect);
  const std::string json = (dir / "r.json").string();
  CliRun r = Cli({"eval", "--pred", p1, "--gold", gold, "--out", json});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(ReadFile(json));
  EXPECT_EQ(j["overall"]["f1"], 100.0);
  EXPECT_EQ(j["with_punctuation"]["f1"], 100.0);
  if (j["without_punctuation"]["tp"] > 0) EXPECT_EQ(j["without_punctuation"]["f1"], 100.0);

  const std::string p0 = Write(dir, "zeros.tsv", zeros);
  r = Cli({"eval", "--pred", p0, "--gold", gold, "--out", json});
  ASSERT_EQ(r.code, 0);
  j = nlohmann::json::parse(ReadFile(json));
  EXPECT_EQ(j["overall"]["recall"], 0.0);

  // Counts agree with a direct position loop.
  OutcomeCounts loop;
  for (const Utterance& u : corpus) {
    for (int l : *u.labels) loop.fn += l;
  }
  EXPECT_EQ(j["overall"]["fn"], loop.fn);

  std::string shifted = perfect;
  shifted.replace(shifted.find("# id=syn1\n"), 10, "# id=zzz\n");
  const std::string bad = Write(dir, "bad.tsv", shifted);
  r = Cli({"eval", "--pred", bad, "--gold", gold});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("syn1"), std::string::npos) << r.err;
}

TEST(CliTest, ConfigFileSetsDefaultsAndFlagsWin) {
  const fs::path dir = testing::TempDir("cli");
  const std::string in = Write(dir, "in.txt", "今日は、晴れ。\n");
  const std::string cfg = Write(dir, "pbp.ini", "[predict]\nsystem=rule-based\nformat=tsv\n");
  CliRun r = Cli({"--config", cfg, "predict", "--in", in});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ParsePredictions(r.out).size(), 1u);
  r = Cli({"--config", cfg, "predict", "--in", in, "--format", "markup"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "今日 は 、<pause/> 晴れ 。\n");
}

}  // namespace
}  // namespace pbp
