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

// Minibatch training with Adam and F1-based early stopping.

#ifndef PBP_TRAINING_H_
#define PBP_TRAINING_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pbp/autograd.h"
#include "pbp/corpus.h"
#include "pbp/model.h"

namespace pbp {

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 20;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  double decision_threshold = 0.5;
  // Off unless set.
  double clip_norm = 0.0;
  double weight_decay = 0.0;

  void Validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // token-weighted mean over the epoch
  double validation_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
  bool stopped_early = false;

  // One "epoch=.. loss=.. val_f1=.. seconds=.." line per epoch.
  std::string Lines() const;
  std::string Json() const;
};

// Tracks the best score; patience counts epochs since the last strict
// improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Records the next epoch's score and returns true when it is a new best.
  bool Update(double f1);
  bool ShouldStop() const { return since_best_ >= patience_; }

  std::size_t epochs() const { return epochs_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_f1() const { return best_f1_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_f1_ = -std::numeric_limits<double>::infinity();
  std::size_t since_best_ = 0;
};

// Utterance indices grouped into batches; the order is a shuffle seeded by
// (seed, epoch).
std::vector<std::vector<std::size_t>> MakeBatches(std::size_t utterance_count,
                                                  std::size_t batch_size, std::uint64_t seed,
                                                  std::size_t epoch);

class Adam {
 public:
  Adam(std::vector<nn::Parameter*> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0);

  // Applies one update from the accumulated grads.
  void Step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
};

// Scales all grads so their joint L2 norm is at most max_norm. Returns the
// norm before scaling.
double ClipGradNorm(std::span<nn::Parameter* const> params, double max_norm);

// Returns the validation F1 for the model's current parameters.
using ValidationScorer = std::function<double(const PhraseBreakModel& model, std::size_t epoch)>;
using EpochCallback = std::function<void(const EpochRecord& record)>;

// Overall F1 on `validation` at `threshold`.
double ValidationF1(const PhraseBreakModel& model, std::span<const Utterance> validation,
                    double threshold);

// Trains in place and leaves the best epoch's parameters in the model. With
// no scorer, validation F1 comes from `validation`.
TrainReport Train(PhraseBreakModel& model, std::span<const Utterance> train,
                  std::span<const Utterance> validation, const TrainConfig& config,
                  const ValidationScorer& scorer = {}, const EpochCallback& on_epoch = {});

struct TrainedSystem {
  std::unique_ptr<PhraseBreakModel> model;
  TrainReport report;
};

// Builds the vocabulary from split.train, creates the model, trains it.
TrainedSystem TrainSystem(const SystemConfig& system, const CorpusSplit& split,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace pbp

#endif  // PBP_TRAINING_H_
