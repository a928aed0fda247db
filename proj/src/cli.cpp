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

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbp/annotator.h"
#include "pbp/checkpoint.h"
#include "pbp/error.h"
#include "pbp/evaluator.h"
#include "pbp/model.h"
#include "pbp/training.h"
#include "pbp/util.h"

namespace pbp {

namespace fs = std::filesystem;

std::string FormatMarkup(std::span<const AnnotatedToken> tokens, std::span<const int> labels) {
  if (tokens.size() != labels.size()) {
    throw ShapeError("markup: " + std::to_string(tokens.size()) + " tokens, " +
                     std::to_string(labels.size()) + " labels");
  }
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i].surface;
    if (labels[i] == 1 && i + 1 < tokens.size()) out += kPauseMarker;
  }
  return out;
}

std::vector<PredictedUtterance> ParsePredictions(std::string_view text, std::string_view source) {
  std::vector<PredictedUtterance> out;
  bool open = false;
  std::size_t line_no = 0;
  const std::string src(source);
  for (const std::string& line : Split(text, '\n')) {
    ++line_no;
    const std::string where = src + ":" + std::to_string(line_no);
    if (line.empty()) {
      open = false;
      continue;
    }
    if (StartsWith(line, "# id=")) {
      out.push_back({line.substr(5), {}, {}});
      open = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!open) throw ParseError(where + ": token line outside an utterance block");
    const std::vector<std::string> cols = Split(line, '\t');
    if (cols.size() < 2) throw ParseError(where + ": expected a prediction column");
    const std::string& last = cols.back();
    if (last != "0" && last != "1") {
      throw ParseError(where + ": prediction must be 0 or 1, got '" + last + "'");
    }
    out.back().surfaces.push_back(cols.front());
    out.back().labels.push_back(last == "1" ? 1 : 0);
  }
  return out;
}

namespace {

// Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

bool LooksLikeCorpus(std::string_view text) {
  const std::string_view t = Trim(text);
  return StartsWith(t, "# id=");
}

SplitSizes ParseSplit(const std::string& text, std::size_t total) {
  const std::vector<std::string> parts = Split(text, ',');
  if (parts.size() != 3) throw UsageError("--split expects three comma-separated values");
  bool fractional = false;
  double values[3];
  for (int i = 0; i < 3; ++i) {
    const auto v = ParseDouble(Trim(parts[i]));
    if (!v || *v < 0) throw UsageError("--split: bad value '" + parts[i] + "'");
    values[i] = *v;
    if (parts[i].find('.') != std::string::npos) fractional = true;
  }
  if (!fractional) {
    return {static_cast<std::size_t>(values[0]), static_cast<std::size_t>(values[1]),
            static_cast<std::size_t>(values[2])};
  }
  if (std::abs(values[0] + values[1] + values[2] - 1.0) > 1e-9) {
    throw UsageError("--split fractions must sum to 1");
  }
  SplitSizes s;
  s.validation = static_cast<std::size_t>(std::llround(values[1] * static_cast<double>(total)));
  s.test = static_cast<std::size_t>(std::llround(values[2] * static_cast<double>(total)));
  if (s.validation + s.test > total) throw UsageError("--split leaves no training data");
  s.train = total - s.validation - s.test;
  return s;
}

std::unique_ptr<Annotator> MakeAnnotator(const std::string& command, const std::string& lexicon) {
  if (!command.empty()) return std::make_unique<CommandAnnotator>(command);
  if (!lexicon.empty()) return std::make_unique<LexiconAnnotator>(LexiconAnnotator::FromFile(lexicon));
  return std::make_unique<LexiconAnnotator>(LexiconAnnotator::Default());
}

void WriteOutput(const std::string& path, const std::string& data, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << data;
  } else {
    WriteFileAtomic(path, data);
  }
}

// ---------------------------------------------------------------- corpus

struct CorpusArgs {
  std::string in, out, split = "98807,500,500";
  std::int64_t threshold_ms = kDefaultBreakThresholdMs;
  std::uint64_t seed = 1;
  std::string annotator_command, lexicon;
};

int RunCorpus(const CorpusArgs& a, std::ostream& out, std::ostream& err) {
  const std::string text = ReadFile(a.in);
  std::vector<Utterance> utterances;
  std::string annotator_fp;
  if (LooksLikeAlignment(text)) {
    std::unique_ptr<Annotator> annotator;
    for (AlignedUtterance& au : ParseAlignment(text, a.in)) {
      Utterance u;
      u.id = au.id;
      u.labels = LabelFromAlignment(au.timings, a.threshold_ms);
      if (au.annotations) {
        u.tokens = std::move(*au.annotations);
      } else {
        if (!annotator) {
          annotator = MakeAnnotator(a.annotator_command, a.lexicon);
          annotator_fp = annotator->Fingerprint();
        }
        std::vector<std::string> surfaces;
        for (const WordTiming& w : au.timings) surfaces.push_back(w.surface);
        try {
          u.tokens = annotator->AnnotateTokens(surfaces);
        } catch (const Error& e) {
          throw AnnotationError(au.id + ": " + e.what());
        }
      }
      ValidateUtterance(u);
      utterances.push_back(std::move(u));
    }
  } else {
    utterances = ParseCorpus(text, a.in);
    for (const Utterance& u : utterances) {
      if (!u.labels) throw InvalidInput(a.in + ": utterance " + u.id + " has no labels");
    }
  }

  const SplitSizes sizes = ParseSplit(a.split, utterances.size());
  const CorpusSplit split = SplitCorpus(utterances, sizes, a.seed);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  WriteCorpus(utterances, dir / "corpus.tsv");
  WriteCorpus(split.train, dir / "train.tsv");
  WriteCorpus(split.validation, dir / "validation.tsv");
  WriteCorpus(split.test, dir / "test.tsv");

  nlohmann::json manifest;
  manifest["source"] = a.in;
  manifest["seed"] = a.seed;
  manifest["threshold_ms"] = a.threshold_ms;
  manifest["annotator"] = annotator_fp;
  auto ids = [](const std::vector<Utterance>& us) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Utterance& u : us) arr.push_back(u.id);
    return arr;
  };
  manifest["train"] = ids(split.train);
  manifest["validation"] = ids(split.validation);
  manifest["test"] = ids(split.test);
  WriteFileAtomic(dir / "manifest.json", manifest.dump(2) + "\n");

  std::size_t tokens = 0, breaks = 0;
  for (const Utterance& u : utterances) {
    tokens += u.size();
    for (int l : *u.labels) breaks += l;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "utterances %zu tokens %zu breaks %zu break_rate %.2f%% split %zu/%zu/%zu\n",
                utterances.size(), tokens, breaks,
                tokens ? 100.0 * static_cast<double>(breaks) / static_cast<double>(tokens) : 0.0,
                sizes.train, sizes.validation, sizes.test);
  out << buf;
  (void)err;
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string system, corpus, train_path, validation_path, out;
  std::string lm, embeddings, pooling = "mean";
  TrainConfig train;
  BiLstmEncoderConfig bilstm;
  std::size_t classifier_hidden = 256;
  bool no_finetune = false;
};

SystemKind ParseSystemFlag(const std::string& name) {
  try {
    return ParseSystemKind(name);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

int RunTrain(TrainArgs a, std::ostream& out, std::ostream& err) {
  const SystemKind kind = ParseSystemFlag(a.system);
  if (kind == SystemKind::kRuleBased) throw UsageError("rule-based requires no training");
  if (UsesLm(kind) && a.lm.empty()) {
    throw UsageError("system " + a.system + " requires --lm <pretrained LM directory>");
  }
  SystemConfig sc = SystemConfig::ForKind(kind, a.lm);
  if (sc.bilstm) {
    const bool features = sc.bilstm->use_linguistic_features;
    *sc.bilstm = a.bilstm;
    sc.bilstm->use_linguistic_features = features;
    sc.bilstm->use_pretrained_word_embeddings = !a.embeddings.empty();
    sc.embeddings_path = a.embeddings;
  }
  if (sc.lm) sc.lm->finetune = !a.no_finetune;
  sc.classifier_hidden = a.classifier_hidden;
  sc.pooling = ParsePooling(a.pooling);
  sc.decision_threshold = a.train.decision_threshold;
  sc.Validate();
  a.train.Validate();

  std::string train_path = a.train_path, validation_path = a.validation_path;
  std::string annotator_fp;
  if (!a.corpus.empty()) {
    const fs::path dir(a.corpus);
    if (train_path.empty()) train_path = (dir / "train.tsv").string();
    if (validation_path.empty()) validation_path = (dir / "validation.tsv").string();
    if (fs::exists(dir / "manifest.json")) {
      const auto m = nlohmann::json::parse(ReadFile(dir / "manifest.json"));
      annotator_fp = m.value("annotator", "");
    }
  }
  if (train_path.empty()) throw UsageError("train needs --corpus or --train");
  for (const std::string& p : {train_path, validation_path}) {
    if (!p.empty() && !fs::exists(p)) throw UsageError("no such file: " + p);
  }
  CorpusSplit split;
  split.train = ReadCorpus(train_path);
  if (!validation_path.empty()) split.validation = ReadCorpus(validation_path);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  TrainedSystem trained = TrainSystem(sc, split, a.train, [&](const EpochRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f val_f1=%.2f seconds=%.3f\n", r.epoch,
                  r.loss, r.validation_f1, r.seconds);
    err << buf << std::flush;
  });
  SaveCheckpoint(*trained.model, dir / "model.ckpt", annotator_fp);
  WriteFileAtomic(dir / "report.txt", trained.report.Lines());
  WriteFileAtomic(dir / "report.json", trained.report.Json());
  out << "epochs " << trained.report.epochs.size() << " best_epoch " << trained.report.best_epoch
      << " best_f1 " << trained.report.best_f1
      << (trained.report.stopped_early ? " stopped_early" : "") << "\n"
      << "checkpoint " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict / eval

struct ModelArgs {
  std::string checkpoint, system, lm, embeddings;
  bool strict = false;
};

std::unique_ptr<PhraseBreakModel> LoadModel(const ModelArgs& a, const std::string& annotator_fp,
                                            std::ostream& err) {
  if (!a.checkpoint.empty() && !a.system.empty()) {
    throw UsageError("give either --checkpoint or --system, not both");
  }
  if (!a.system.empty()) {
    const SystemKind kind = ParseSystemFlag(a.system);
    if (kind != SystemKind::kRuleBased) {
      throw UsageError("--system " + a.system + " needs a trained --checkpoint");
    }
    return PhraseBreakModel::Create(SystemConfig::ForKind(kind), TokenVocabulary(), 0);
  }
  if (a.checkpoint.empty()) throw UsageError("give --checkpoint or --system rule-based");
  CheckpointLoadOptions opts;
  opts.annotator_fingerprint = annotator_fp;
  opts.strict = a.strict;
  opts.lm_dir = a.lm;
  opts.embeddings_path = a.embeddings;
  LoadedCheckpoint loaded = LoadCheckpoint(a.checkpoint, opts);
  for (const std::string& w : loaded.warnings) err << "warning: " << w << "\n";
  return std::move(loaded.model);
}

struct PredictArgs {
  ModelArgs model;
  std::string in, out, format = "markup";
  std::string annotator_command, lexicon;
};

// Appends one prediction column to every token line of a corpus TSV.
std::string AppendColumn(std::string_view text, const std::vector<std::vector<int>>& labels) {
  std::string out;
  std::size_t block = 0, tok = 0;
  bool open = false;
  const std::vector<std::string> lines = Split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (i + 1 == lines.size() && line.empty()) break;
    out += line;
    if (line.empty()) {
      if (open) ++block;
      open = false;
    } else if (StartsWith(line, "# id=")) {
      open = true;
      tok = 0;
    } else if (line[0] != '#') {
      out += '\t';
      out += std::to_string(labels.at(block).at(tok++));
    }
    out += '\n';
  }
  return out;
}

int RunPredict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  if (a.format != "markup" && a.format != "tsv") {
    throw UsageError("--format must be markup or tsv");
  }
  const std::string text = ReadFile(a.in);
  std::vector<Utterance> utterances;
  const bool tsv_in = LooksLikeCorpus(text);
  std::string annotator_fp;
  if (tsv_in) {
    utterances = ParseCorpus(text, a.in);
  } else {
    const std::unique_ptr<Annotator> annotator = MakeAnnotator(a.annotator_command, a.lexicon);
    annotator_fp = annotator->Fingerprint();
    std::size_t line_no = 0;
    for (const std::string& line : Split(text, '\n')) {
      ++line_no;
      if (Trim(line).empty()) continue;
      Utterance u;
      u.id = "line" + std::to_string(line_no);
      u.tokens = Annotate(Trim(line), *annotator, u.id);
      utterances.push_back(std::move(u));
    }
  }
  if (utterances.empty()) {
    WriteOutput(a.out, "", out);
    return 0;
  }
  const std::unique_ptr<PhraseBreakModel> model = LoadModel(a.model, annotator_fp, err);
  const std::vector<Prediction> preds = model->PredictAll(utterances);
  std::vector<std::vector<int>> labels;
  for (const Prediction& p : preds) labels.push_back(p.labels);

  std::string result;
  if (a.format == "markup") {
    for (std::size_t i = 0; i < utterances.size(); ++i) {
      result += FormatMarkup(utterances[i].tokens, labels[i]) + "\n";
    }
  } else if (tsv_in) {
    result = AppendColumn(text, labels);
  } else {
    result = AppendColumn(FormatCorpus(utterances), labels);
  }
  WriteOutput(a.out, result, out);
  return 0;
}

struct EvalArgs {
  ModelArgs model;
  std::string pred, gold, out, name;
};

int RunEval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<Utterance> gold = ReadCorpus(a.gold);
  StratifiedReport report;
  std::string name = a.name;
  if (!a.pred.empty()) {
    if (!a.model.checkpoint.empty() || !a.model.system.empty()) {
      throw UsageError("give either --pred or a model, not both");
    }
    const std::vector<PredictedUtterance> pred = ParsePredictions(ReadFile(a.pred), a.pred);
    if (pred.size() != gold.size()) {
      const std::size_t k = std::min(pred.size(), gold.size());
      const std::string id = k < gold.size() ? gold[k].id : pred[k].id;
      throw InvalidInput("predictions hold " + std::to_string(pred.size()) +
                         " utterances, gold holds " + std::to_string(gold.size()) +
                         "; first unmatched utterance " + id);
    }
    std::vector<std::vector<int>> labels;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const Utterance& g = gold[i];
      const PredictedUtterance& p = pred[i];
      bool same = p.id == g.id && p.surfaces.size() == g.size();
      for (std::size_t t = 0; same && t < g.size(); ++t) {
        same = p.surfaces[t] == g.tokens[t].surface;
      }
      if (!same) {
        throw InvalidInput("prediction and gold misaligned at utterance " + g.id +
                           (p.id != g.id ? " (prediction has " + p.id + ")" : ""));
      }
      labels.push_back(p.labels);
    }
    report = EvaluateLabels(labels, gold);
    if (name.empty()) name = fs::path(a.pred).filename().string();
  } else {
    const std::unique_ptr<PhraseBreakModel> model = LoadModel(a.model, "", err);
    report = EvaluateSystem(*model, gold);
    if (name.empty()) name = std::string(SystemName(model->config().kind));
  }
  out << FormatReport(report, name);
  if (!a.out.empty()) WriteFileAtomic(a.out, ReportJson(report, name));
  return 0;
}

std::string SystemChoices() {
  std::string s;
  for (SystemKind k : kAllSystems) {
    if (!s.empty()) s += "|";
    s += SystemName(k);
  }
  return s;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phrase-break prediction for Japanese TTS front-ends", "pbp"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file of default flag values; flags on the command line win");

  CorpusArgs ca;
  CLI::App* corpus = app.add_subcommand("corpus", "Label and split a corpus");
  corpus->add_option("--in", ca.in, "Alignment file or labeled corpus TSV")
      ->required()
      ->check(CLI::ExistingFile);
  corpus->add_option("--out", ca.out, "Output directory")->required();
  corpus->add_option("--threshold-ms", ca.threshold_ms, "Silence longer than this is a break")
      ->capture_default_str();
  corpus->add_option("--split", ca.split, "train,validation,test counts or fractions")
      ->capture_default_str();
  corpus->add_option("--seed", ca.seed, "Split seed")->capture_default_str();
  corpus->add_option("--annotator-command", ca.annotator_command,
                     "External analyzer for unannotated alignments");
  corpus->add_option("--lexicon", ca.lexicon, "Extra lexicon for the built-in annotator")
      ->check(CLI::ExistingFile);

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train a system");
  train->add_option("--system", ta.system, SystemChoices())->required();
  train->add_option("--corpus", ta.corpus, "Directory written by `pbp corpus`")
      ->check(CLI::ExistingDirectory);
  train->add_option("--train", ta.train_path, "Training TSV (overrides --corpus)")
      ->check(CLI::ExistingFile);
  train->add_option("--validation", ta.validation_path, "Validation TSV (overrides --corpus)")
      ->check(CLI::ExistingFile);
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--lr", ta.train.learning_rate)->capture_default_str();
  train->add_option("--batch-size", ta.train.batch_size)->capture_default_str();
  train->add_option("--max-epochs", ta.train.max_epochs)->capture_default_str();
  train->add_option("--patience", ta.train.patience)->capture_default_str();
  train->add_option("--seed", ta.train.seed)->capture_default_str();
  train->add_option("--threshold", ta.train.decision_threshold)->capture_default_str();
  train->add_option("--clip-norm", ta.train.clip_norm, "0 disables")->capture_default_str();
  train->add_option("--weight-decay", ta.train.weight_decay)->capture_default_str();
  train->add_option("--lm", ta.lm, "Pretrained LM directory")->check(CLI::ExistingDirectory);
  train->add_flag("--no-finetune", ta.no_finetune, "Keep the LM frozen");
  train->add_option("--embeddings", ta.embeddings, "Pretrained word-vector file")
      ->check(CLI::ExistingFile);
  train->add_option("--pooling", ta.pooling, "Subword pooling: mean|first")->capture_default_str();
  train->add_option("--layers", ta.bilstm.layers)->capture_default_str();
  train->add_option("--hidden", ta.bilstm.hidden_per_direction, "BiLSTM units per direction")
      ->capture_default_str();
  train->add_option("--token-dim", ta.bilstm.token_embedding_dim)->capture_default_str();
  train->add_option("--feature-dim", ta.bilstm.feature_embedding_dim)->capture_default_str();
  train->add_option("--classifier-hidden", ta.classifier_hidden, "0 for a linear classifier")
      ->capture_default_str();

  PredictArgs pa;
  CLI::App* predict = app.add_subcommand("predict", "Predict breaks");
  predict->add_option("--checkpoint", pa.model.checkpoint)->check(CLI::ExistingFile);
  predict->add_option("--system", pa.model.system, "rule-based");
  predict->add_option("--in", pa.in, "Text (one sentence per line) or corpus TSV")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--out", pa.out, "Output file (default stdout)");
  predict->add_option("--format", pa.format, "markup|tsv")->capture_default_str();
  predict->add_option("--lm", pa.model.lm, "Replacement LM directory")
      ->check(CLI::ExistingDirectory);
  predict->add_option("--embeddings", pa.model.embeddings)->check(CLI::ExistingFile);
  predict->add_flag("--strict", pa.model.strict, "Fingerprint mismatches are errors");
  predict->add_option("--annotator-command", pa.annotator_command);
  predict->add_option("--lexicon", pa.lexicon)->check(CLI::ExistingFile);

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against a gold corpus");
  eval->add_option("--pred", ea.pred, "Prediction TSV (last column)")->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", ea.model.checkpoint)->check(CLI::ExistingFile);
  eval->add_option("--system", ea.model.system, "rule-based");
  eval->add_option("--gold", ea.gold)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ea.out, "JSON report path");
  eval->add_option("--name", ea.name, "System name shown in the report");
  eval->add_option("--lm", ea.model.lm)->check(CLI::ExistingDirectory);
  eval->add_option("--embeddings", ea.model.embeddings)->check(CLI::ExistingFile);
  eval->add_flag("--strict", ea.model.strict);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (corpus->parsed()) return RunCorpus(ca, out, err);
    if (train->parsed()) return RunTrain(ta, out, err);
    if (predict->parsed()) return RunPredict(pa, out, err);
    return RunEval(ea, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pbp
