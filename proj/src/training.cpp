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

#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "pbp/error.h"
#include "pbp/evaluator.h"
#include "pbp/util.h"

namespace pbp {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidInput("learning rate must be positive");
  }
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  if (max_epochs == 0) throw InvalidInput("max epochs must be positive");
  if (patience == 0) throw InvalidInput("patience must be positive");
  if (patience > max_epochs) {
    throw InvalidInput("patience " + std::to_string(patience) + " exceeds max epochs " +
                       std::to_string(max_epochs));
  }
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw InvalidInput("decision threshold must lie in (0, 1)");
  }
  if (clip_norm < 0.0 || weight_decay < 0.0) {
    throw InvalidInput("clip norm and weight decay must be non-negative");
  }
}

std::string TrainReport::Lines() const {
  std::string out;
  char buf[160];
  for (const EpochRecord& r : epochs) {
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f val_f1=%.2f seconds=%.3f\n", r.epoch,
                  r.loss, r.validation_f1, r.seconds);
    out += buf;
  }
  return out;
}

std::string TrainReport::Json() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["best_f1"] = best_f1;
  j["stopped_early"] = stopped_early;
  j["epochs"] = nlohmann::json::array();
  for (const EpochRecord& r : epochs) {
    j["epochs"].push_back({{"epoch", r.epoch},
                           {"loss", r.loss},
                           {"val_f1", r.validation_f1},
                           {"seconds", r.seconds}});
  }
  return j.dump(2) + "\n";
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw InvalidInput("patience must be positive");
}

bool EarlyStopping::Update(double f1) {
  ++epochs_;
  if (f1 > best_f1_) {
    best_f1_ = f1;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::vector<std::vector<std::size_t>> MakeBatches(std::size_t utterance_count,
                                                  std::size_t batch_size, std::uint64_t seed,
                                                  std::size_t epoch) {
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  std::vector<std::size_t> order(utterance_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, epoch);
  rng.Shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  return batches;
}

Adam::Adam(std::vector<nn::Parameter*> params, double learning_rate, double beta1, double beta2,
           double eps, double weight_decay)
    : params_(std::move(params)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  for (nn::Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::Step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    nn::Parameter& p = *params_[k];
    if (!p.trainable) continue;
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + weight_decay_ * w[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double ClipGradNorm(std::span<nn::Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const nn::Parameter* p : params) {
    for (Scalar g : p->grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (nn::Parameter* p : params) {
      for (Scalar& g : p->grad.values()) g *= s;
    }
  }
  return norm;
}

double ValidationF1(const PhraseBreakModel& model, std::span<const Utterance> validation,
                    double threshold) {
  const std::vector<Prediction> preds = model.PredictAll(validation);
  std::vector<std::vector<int>> labels;
  labels.reserve(preds.size());
  for (const Prediction& p : preds) labels.push_back(ThresholdLabels(p.probabilities, threshold));
  return EvaluateLabels(labels, validation).overall.scores.f1;
}

namespace {

std::vector<nn::Parameter*> Trainable(nn::ParameterStore& store) {
  std::vector<nn::Parameter*> out;
  for (nn::Parameter* p : store.All()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

std::vector<Matrix> Snapshot(std::span<nn::Parameter* const> params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const nn::Parameter* p : params) out.push_back(p->value);
  return out;
}

std::string Where(std::size_t epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
}

}  // namespace

TrainReport Train(PhraseBreakModel& model, std::span<const Utterance> train,
                  std::span<const Utterance> validation, const TrainConfig& config,
                  const ValidationScorer& scorer, const EpochCallback& on_epoch) {
  config.Validate();
  if (model.config().kind == SystemKind::kRuleBased) {
    throw InvalidInput("rule-based requires no training");
  }
  if (train.empty()) throw InvalidInput("training set is empty");
  if (!scorer && validation.empty()) throw InvalidInput("validation set is empty");
  for (const Utterance& u : train) {
    if (!u.labels) throw InvalidInput("training utterance " + u.id + " has no labels");
  }

  const std::vector<nn::Parameter*> params = Trainable(model.params());
  Adam adam(params, config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay);
  EarlyStopping stopping(config.patience);
  std::vector<Matrix> best = Snapshot(params);
  TrainReport report;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batches = MakeBatches(train.size(), config.batch_size, config.seed, epoch);
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const Utterance*> members;
      std::size_t tokens = 0;
      for (std::size_t i : batches[b]) {
        members.push_back(&train[i]);
        tokens += train[i].size();
      }
      const ModelBatch batch = model.MakeBatch(members);
      model.params().ZeroGrad();
      nn::Graph g;
      const nn::Expr loss = model.Loss(g, batch);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite loss at " + Where(epoch, b + 1) + " (first utterance " +
                            members.front()->id + ")");
      }
      g.Backward(loss);
      if (config.clip_norm > 0.0) ClipGradNorm(params, config.clip_norm);
      adam.Step();
      loss_sum += value * static_cast<double>(tokens);
      token_sum += tokens;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(token_sum);
    rec.validation_f1 =
        scorer ? scorer(model, epoch) : ValidationF1(model, validation, config.decision_threshold);
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    if (stopping.Update(rec.validation_f1)) best = Snapshot(params);
    if (on_epoch) on_epoch(rec);
    if (stopping.ShouldStop() && epoch < config.max_epochs) {
      report.stopped_early = true;
      break;
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  report.best_epoch = stopping.best_epoch();
  report.best_f1 = stopping.best_f1();
  return report;
}

TrainedSystem TrainSystem(const SystemConfig& system, const CorpusSplit& split,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (system.kind == SystemKind::kRuleBased) {
    throw InvalidInput("rule-based requires no training");
  }
  if (split.train.empty()) throw InvalidInput("training set is empty");
  SystemConfig sc = system;
  sc.decision_threshold = config.decision_threshold;
  TrainedSystem out;
  out.model = PhraseBreakModel::Create(sc, BuildVocabulary(split.train), config.seed);
  out.report = Train(*out.model, split.train, split.validation, config, {}, on_epoch);
  return out;
}

}  // namespace pbp
