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

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>

#include "json.hpp"
#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

struct SystemTraits {
  SystemKind kind;
  std::string_view name;
  bool bilstm;
  bool lm;
  bool features;
};

constexpr SystemTraits kTraits[] = {
    {SystemKind::kRuleBased, "rule-based", false, false, false},
    {SystemKind::kBiLstmTokens, "bilstm-tokens", true, false, false},
    {SystemKind::kBiLstmFeatures, "bilstm-features", true, false, true},
    {SystemKind::kLmOnly, "lm", false, true, false},
    {SystemKind::kBiLstmTokensPlusLm, "bilstm-tokens+lm", true, true, false},
    {SystemKind::kBiLstmFeaturesPlusLm, "bilstm-features+lm", true, true, true},
};

const SystemTraits& Traits(SystemKind kind) {
  for (const auto& t : kTraits) {
    if (t.kind == kind) return t;
  }
  throw InvalidInput("unknown system kind");
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix Glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const Scalar bound = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
  Matrix m(rows, cols);
  for (Scalar& v : m.values()) v = rng.Uniform(-bound, bound);
  return m;
}

constexpr Scalar kClamp = 1e-7;

}  // namespace

std::string_view SystemName(SystemKind kind) { return Traits(kind).name; }

SystemKind ParseSystemKind(std::string_view name) {
  std::string valid;
  for (const auto& t : kTraits) {
    if (t.name == name) return t.kind;
    if (!valid.empty()) valid += ", ";
    valid += t.name;
  }
  throw InvalidInput("unknown system '" + std::string(name) + "'; valid systems: " + valid);
}

bool UsesBiLstm(SystemKind kind) { return Traits(kind).bilstm; }
bool UsesLm(SystemKind kind) { return Traits(kind).lm; }
bool UsesLinguisticFeatures(SystemKind kind) { return Traits(kind).features; }

// ---------------------------------------------------------------------------

SystemConfig SystemConfig::ForKind(SystemKind kind, const std::string& lm_checkpoint) {
  SystemConfig c;
  c.kind = kind;
  if (UsesBiLstm(kind)) {
    BiLstmEncoderConfig b;
    b.use_linguistic_features = UsesLinguisticFeatures(kind);
    c.bilstm = b;
  }
  if (UsesLm(kind)) {
    LmEncoderConfig l;
    l.checkpoint_id = lm_checkpoint;
    const auto config_path = std::filesystem::path(lm_checkpoint) / "config.json";
    if (!lm_checkpoint.empty() && std::filesystem::exists(config_path)) {
      const BertConfig bert = BertConfig::FromJson(ReadFile(config_path), config_path.string());
      l.layer_count = bert.num_hidden_layers;
      l.hidden_dim = bert.hidden_size;
    }
    c.lm = l;
  }
  return c;
}

void SystemConfig::Validate() const {
  const std::string name(SystemName(kind));
  if (bilstm.has_value() != UsesBiLstm(kind)) {
    throw InvalidInput("system " + name + (UsesBiLstm(kind) ? " requires" : " takes no") +
                       " BiLSTM settings");
  }
  if (lm.has_value() != UsesLm(kind)) {
    throw InvalidInput("system " + name + (UsesLm(kind) ? " requires" : " takes no") +
                       " LM settings");
  }
  if (bilstm) {
    bilstm->Validate();
    if (bilstm->use_linguistic_features != UsesLinguisticFeatures(kind)) {
      throw InvalidInput("system " + name + " has inconsistent linguistic-feature setting");
    }
    if (bilstm->use_pretrained_word_embeddings && embeddings_path.empty()) {
      throw InvalidInput("pretrained word embeddings enabled without an embeddings path");
    }
  }
  if (lm) {
    lm->Validate();
    if (lm->checkpoint_id.empty()) throw InvalidInput("system " + name + " needs an LM checkpoint");
  }
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw InvalidInput("decision threshold must lie in (0, 1)");
  }
}

std::string SystemConfig::Serialize() const {
  std::string out;
  auto put = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  put("system", std::string(SystemName(kind)));
  put("classifier_hidden", std::to_string(classifier_hidden));
  put("pooling", std::string(PoolingName(pooling)));
  put("decision_threshold", FormatDouble(decision_threshold));
  put("embeddings_path", embeddings_path);
  if (bilstm) {
    put("bilstm.layers", std::to_string(bilstm->layers));
    put("bilstm.hidden_per_direction", std::to_string(bilstm->hidden_per_direction));
    put("bilstm.token_embedding_dim", std::to_string(bilstm->token_embedding_dim));
    put("bilstm.feature_embedding_dim", std::to_string(bilstm->feature_embedding_dim));
    put("bilstm.use_linguistic_features", bilstm->use_linguistic_features ? "1" : "0");
    put("bilstm.use_pretrained_word_embeddings", bilstm->use_pretrained_word_embeddings ? "1" : "0");
  }
  if (lm) {
    put("lm.checkpoint_id", lm->checkpoint_id);
    put("lm.layer_count", std::to_string(lm->layer_count));
    put("lm.hidden_dim", std::to_string(lm->hidden_dim));
    put("lm.finetune", lm->finetune ? "1" : "0");
  }
  return out;
}

SystemConfig SystemConfig::Parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  int line_no = 0;
  for (const std::string& raw : Split(text, '\n')) {
    ++line_no;
    const std::string_view line = Trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("system config line " + std::to_string(line_no) + ": expected key=value");
    }
    kv[std::string(Trim(line.substr(0, eq)))] = std::string(Trim(line.substr(eq + 1)));
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto size = [&](const std::string& key, std::size_t fallback) {
    const auto v = take(key);
    if (!v) return fallback;
    const auto n = ParseInt(*v);
    if (!n || *n < 0) throw ParseError("system config: bad value for " + key + ": " + *v);
    return static_cast<std::size_t>(*n);
  };
  auto flag = [&](const std::string& key, bool fallback) {
    const auto v = take(key);
    if (!v) return fallback;
    if (*v == "1" || *v == "true") return true;
    if (*v == "0" || *v == "false") return false;
    throw ParseError("system config: bad value for " + key + ": " + *v);
  };

  const auto system = take("system");
  if (!system) throw ParseError("system config: missing 'system'");
  SystemConfig c;
  c.kind = ParseSystemKind(*system);
  c.classifier_hidden = size("classifier_hidden", c.classifier_hidden);
  if (const auto p = take("pooling")) c.pooling = ParsePooling(*p);
  if (const auto t = take("decision_threshold")) {
    const auto v = ParseDouble(*t);
    if (!v) throw ParseError("system config: bad decision_threshold " + *t);
    c.decision_threshold = *v;
  }
  if (const auto e = take("embeddings_path")) c.embeddings_path = *e;
  if (UsesBiLstm(c.kind)) {
    BiLstmEncoderConfig b;
    b.layers = size("bilstm.layers", b.layers);
    b.hidden_per_direction = size("bilstm.hidden_per_direction", b.hidden_per_direction);
    b.token_embedding_dim = size("bilstm.token_embedding_dim", b.token_embedding_dim);
    b.feature_embedding_dim = size("bilstm.feature_embedding_dim", b.feature_embedding_dim);
    b.use_linguistic_features =
        flag("bilstm.use_linguistic_features", UsesLinguisticFeatures(c.kind));
    b.use_pretrained_word_embeddings = flag("bilstm.use_pretrained_word_embeddings", false);
    c.bilstm = b;
  }
  if (UsesLm(c.kind)) {
    LmEncoderConfig l;
    l.checkpoint_id = take("lm.checkpoint_id").value_or("");
    l.layer_count = size("lm.layer_count", l.layer_count);
    l.hidden_dim = size("lm.hidden_dim", l.hidden_dim);
    l.finetune = flag("lm.finetune", l.finetune);
    c.lm = l;
  }
  if (!kv.empty()) {
    throw ParseError("system config: unknown or inapplicable key '" + kv.begin()->first + "'");
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------

std::vector<int> ThresholdLabels(std::span<const Scalar> probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

Prediction RuleBasedPredict(std::span<const AnnotatedToken> tokens) {
  Prediction p;
  p.labels.assign(tokens.size(), 0);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) p.labels[i] = tokens[i].is_punct ? 1 : 0;
  p.probabilities.assign(p.labels.begin(), p.labels.end());
  return p;
}

Scalar BreakLoss(std::span<const Scalar> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size()) {
    throw ShapeError("loss: " + std::to_string(probabilities.size()) + " probabilities for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  Scalar total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Scalar p = std::clamp(probabilities[i], kClamp, 1.0 - kClamp);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<Scalar>(labels.size());
}

// ---------------------------------------------------------------------------

std::unique_ptr<PhraseBreakModel> PhraseBreakModel::Create(const SystemConfig& config,
                                                           TokenVocabulary vocab,
                                                           std::uint64_t seed,
                                                           const LmArchitecture* lm_override) {
  config.Validate();
  std::unique_ptr<PhraseBreakModel> m(new PhraseBreakModel());
  m->config_ = config;
  m->vocab_ = std::move(vocab);
  m->store_ = std::make_unique<nn::ParameterStore>();
  nn::ParameterStore& store = *m->store_;
  Rng rng(seed);
  std::size_t width = 0;

  if (config.bilstm) {
    std::size_t pretrained_dim = 0;
    if (config.bilstm->use_pretrained_word_embeddings) {
      const std::string text = ReadFile(config.embeddings_path);
      m->embeddings_ = ParseEmbeddingTable(text, config.embeddings_path);
      m->embeddings_fingerprint_ = "vectors:" + HashHex(text);
      pretrained_dim = m->embeddings_->dimension();
    }
    m->bilstm_.emplace(*config.bilstm, m->vocab_.size(), pretrained_dim, store, rng);
    width += m->bilstm_->output_dim();
  }
  if (config.lm) {
    if (lm_override != nullptr) {
      m->lm_.emplace(lm_override->config, lm_override->tokenizer, config.lm->finetune, store, rng);
      m->lm_->set_fingerprint(lm_override->fingerprint);
    } else {
      m->lm_ = LmEncoder::Load(config.lm->checkpoint_id, config.lm->finetune, store);
    }
    if (m->lm_->layer_count() != config.lm->layer_count ||
        m->lm_->hidden_dim() != config.lm->hidden_dim) {
      throw InvalidInput("LM checkpoint has " + std::to_string(m->lm_->layer_count()) +
                         " layers of width " + std::to_string(m->lm_->hidden_dim()) +
                         ", configuration expects " + std::to_string(config.lm->layer_count) +
                         " of width " + std::to_string(config.lm->hidden_dim));
    }
    m->mix_.emplace(m->lm_->layer_count(), store);
    width += m->lm_->hidden_dim();
  }
  m->classifier_input_dim_ = width;
  if (config.kind != SystemKind::kRuleBased) {
    std::size_t head_in = width;
    if (config.classifier_hidden > 0) {
      m->hidden_w_ = &store.Add("classifier.hidden.weight", Glorot(width, config.classifier_hidden, rng));
      m->hidden_b_ = &store.Add("classifier.hidden.bias", Matrix(1, config.classifier_hidden));
      head_in = config.classifier_hidden;
    }
    m->out_w_ = &store.Add("classifier.output.weight", Glorot(head_in, 1, rng));
    m->out_b_ = &store.Add("classifier.output.bias", Matrix(1, 1));
  }
  return m;
}

ModelBatch PhraseBreakModel::MakeBatch(std::span<const Utterance* const> utterances) const {
  ModelBatch batch;
  batch.labeled = !utterances.empty();
  std::vector<std::span<const AnnotatedToken>> seqs;
  for (const Utterance* u : utterances) {
    if (u->tokens.empty()) throw AnnotationError("utterance " + u->id + " has no tokens");
    try {
      ValidateUtterance(*u);
    } catch (const Error& e) {
      throw AnnotationError(std::string("missing or malformed annotations: ") + e.what());
    }
    batch.labeled = batch.labeled && u->labels.has_value();
    seqs.emplace_back(u->tokens);
    if (lm_) {
      try {
        batch.subwords.push_back(lm_->Tokenize(u->tokens));
      } catch (const AlignmentError& e) {
        throw AlignmentError("utterance " + u->id + ": " + e.what());
      } catch (const InvalidInput& e) {
        throw InvalidInput("utterance " + u->id + ": " + e.what());
      }
    }
    if (config_.kind == SystemKind::kRuleBased) batch.rule.push_back(RuleBasedPredict(u->tokens));
  }
  batch.inputs = MakeExplicitBatch(seqs, vocab_, embeddings());
  batch.targets.assign(batch.inputs.rows(), 0.0);
  if (batch.labeled) {
    for (std::size_t b = 0; b < utterances.size(); ++b) {
      const auto& labels = *utterances[b]->labels;
      for (std::size_t t = 0; t < labels.size(); ++t) {
        batch.targets[batch.inputs.Row(t, b)] = labels[t];
      }
    }
  }
  return batch;
}

nn::Expr PhraseBreakModel::Forward(nn::Graph& g, const ModelBatch& batch) const {
  const ExplicitBatch& in = batch.inputs;
  if (config_.kind == SystemKind::kRuleBased) {
    Matrix p(in.rows(), 1);
    for (std::size_t b = 0; b < batch.rule.size(); ++b) {
      for (std::size_t t = 0; t < in.lengths[b]; ++t) {
        p(in.Row(t, b), 0) = batch.rule[b].probabilities[t];
      }
    }
    return g.Constant(std::move(p));
  }
  std::vector<nn::Expr> parts;
  if (bilstm_) parts.push_back(bilstm_->Encode(g, in));
  if (lm_) {
    if (batch.subwords.size() != in.batch_size) {
      throw InvalidInput("batch lacks subword encodings for the LM");
    }
    std::vector<nn::Expr> words;
    for (std::size_t b = 0; b < in.batch_size; ++b) {
      const auto layers = lm_->Encode(g, batch.subwords[b].ids);
      const nn::Expr mixed = mix_->Apply(g, layers);
      words.push_back(PoolToWords(mixed, batch.subwords[b].alignment, config_.pooling));
    }
    std::vector<nn::RowRef> refs(in.rows(), nn::RowRef{-1, 0});
    for (std::size_t b = 0; b < in.batch_size; ++b) {
      for (std::size_t t = 0; t < in.lengths[b]; ++t) {
        refs[in.Row(t, b)] = {static_cast<int>(b), static_cast<int>(t)};
      }
    }
    parts.push_back(nn::GatherRows(words, refs));
  }
  nn::Expr x = parts.size() == 2 ? Fuse(parts[0], parts[1]) : parts[0];
  if (hidden_w_ != nullptr) {
    x = nn::Tanh(nn::AddRow(nn::MatMul(x, g.Param(*hidden_w_)), g.Param(*hidden_b_)));
  }
  return nn::Sigmoid(nn::AddRow(nn::MatMul(x, g.Param(*out_w_)), g.Param(*out_b_)));
}

nn::Expr PhraseBreakModel::Loss(nn::Graph& g, const ModelBatch& batch) const {
  if (!batch.labeled) throw InvalidInput("loss requires labeled utterances");
  return nn::BinaryCrossEntropy(Forward(g, batch), batch.targets, batch.inputs.mask, kClamp);
}

std::vector<Prediction> PhraseBreakModel::PredictBatch(
    std::span<const Utterance* const> utterances) const {
  if (utterances.empty()) return {};
  const ModelBatch batch = MakeBatch(utterances);
  nn::Graph g;
  const Matrix probs = Forward(g, batch).value();
  std::vector<Prediction> out(utterances.size());
  for (std::size_t b = 0; b < utterances.size(); ++b) {
    Prediction& p = out[b];
    for (std::size_t t = 0; t < batch.inputs.lengths[b]; ++t) {
      p.probabilities.push_back(probs(batch.inputs.Row(t, b), 0));
    }
    p.labels = ThresholdLabels(p.probabilities, config_.decision_threshold);
  }
  return out;
}

Prediction PhraseBreakModel::Predict(const Utterance& utterance) const {
  const Utterance* one[] = {&utterance};
  return PredictBatch(one).front();
}

std::vector<Prediction> PhraseBreakModel::PredictAll(std::span<const Utterance> utterances,
                                                     std::size_t batch_size) const {
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  std::vector<Prediction> out(utterances.size());
  const auto chunks = static_cast<std::int64_t>((utterances.size() + batch_size - 1) / batch_size);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < chunks; ++c) {
    try {
      const std::size_t begin = static_cast<std::size_t>(c) * batch_size;
      const std::size_t end = std::min(utterances.size(), begin + batch_size);
      std::vector<const Utterance*> ptrs;
      for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&utterances[i]);
      auto preds = PredictBatch(ptrs);
      for (std::size_t i = begin; i < end; ++i) out[i] = std::move(preds[i - begin]);
    } catch (...) {
#pragma omp critical(pbp_predict_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

TokenVocabulary BuildVocabulary(std::span<const Utterance> utterances) {
  std::vector<std::string> words;
  for (const Utterance& u : utterances) {
    for (const AnnotatedToken& t : u.tokens) words.push_back(t.surface);
  }
  return TokenVocabulary(words);
}

}  // namespace pbp
