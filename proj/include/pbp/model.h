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

// The phrase-break classifier: explicit and/or implicit token features, a
// small feed-forward head and a per-token sigmoid.

#ifndef PBP_MODEL_H_
#define PBP_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/autograd.h"
#include "pbp/corpus.h"
#include "pbp/encoders.h"
#include "pbp/lexfeat.h"
#include "pbp/lm_encoder.h"

namespace pbp {

enum class SystemKind {
  kRuleBased,
  kBiLstmTokens,
  kBiLstmFeatures,
  kLmOnly,
  kBiLstmTokensPlusLm,
  kBiLstmFeaturesPlusLm,
};

inline constexpr SystemKind kAllSystems[] = {
    SystemKind::kRuleBased,          SystemKind::kBiLstmTokens,
    SystemKind::kBiLstmFeatures,     SystemKind::kLmOnly,
    SystemKind::kBiLstmTokensPlusLm, SystemKind::kBiLstmFeaturesPlusLm,
};

// Command-line names: rule-based, bilstm-tokens, bilstm-features, lm,
// bilstm-tokens+lm, bilstm-features+lm.
std::string_view SystemName(SystemKind kind);
// Throws InvalidInput listing the valid names.
SystemKind ParseSystemKind(std::string_view name);
bool UsesBiLstm(SystemKind kind);
bool UsesLm(SystemKind kind);
bool UsesLinguisticFeatures(SystemKind kind);

struct SystemConfig {
  SystemKind kind = SystemKind::kBiLstmFeaturesPlusLm;
  std::optional<BiLstmEncoderConfig> bilstm;
  std::optional<LmEncoderConfig> lm;
  std::size_t classifier_hidden = 256;  // 0 projects the features directly
  PoolingMode pooling = PoolingMode::kMean;
  std::string embeddings_path;  // word-vector table, when the BiLSTM uses one
  double decision_threshold = 0.5;

  // Default encoder settings for `kind`; the LM is read from `lm_checkpoint`.
  static SystemConfig ForKind(SystemKind kind, const std::string& lm_checkpoint = "");

  void Validate() const;
  std::string Serialize() const;  // key=value lines
  static SystemConfig Parse(std::string_view text);
  friend bool operator==(const SystemConfig& a, const SystemConfig& b) {
    return a.Serialize() == b.Serialize();
  }
};

struct Prediction {
  std::vector<Scalar> probabilities;
  std::vector<int> labels;
};

std::vector<int> ThresholdLabels(std::span<const Scalar> probabilities, double threshold);

// Break after every punctuation token except the last token.
Prediction RuleBasedPredict(std::span<const AnnotatedToken> tokens);

// Mean binary cross-entropy, probabilities clamped to [1e-7, 1 - 1e-7].
Scalar BreakLoss(std::span<const Scalar> probabilities, std::span<const int> labels);

// Model inputs for a padded batch.
struct ModelBatch {
  ExplicitBatch inputs;                 // time-major layout and mask
  std::vector<SubwordEncoding> subwords;  // one per utterance when the LM is used
  std::vector<Scalar> targets;          // 0/1 per row, 0 at padding
  std::vector<Prediction> rule;         // rule-based outputs, one per utterance
  bool labeled = false;
};

class PhraseBreakModel {
 public:
  // LM architecture and vocabulary supplied directly instead of read from
  // config.lm->checkpoint_id; weights are loaded separately.
  struct LmArchitecture {
    BertConfig config;
    WordPieceTokenizer tokenizer;
    std::string fingerprint;
  };

  // Freshly initialized model. Reads the word-vector table and, unless
  // `lm_override` is given, the pretrained LM named by the config.
  static std::unique_ptr<PhraseBreakModel> Create(const SystemConfig& config,
                                                  TokenVocabulary vocab, std::uint64_t seed,
                                                  const LmArchitecture* lm_override = nullptr);

  // Validates annotations and lays out utterances for Forward().
  ModelBatch MakeBatch(std::span<const Utterance* const> utterances) const;
  // rows x 1 break probabilities in the batch's time-major layout.
  nn::Expr Forward(nn::Graph& g, const ModelBatch& batch) const;
  // Token-weighted mean cross-entropy over the real positions.
  nn::Expr Loss(nn::Graph& g, const ModelBatch& batch) const;

  Prediction Predict(const Utterance& utterance) const;
  std::vector<Prediction> PredictBatch(std::span<const Utterance* const> utterances) const;
  // Batches are evaluated on parallel workers; output order follows input.
  std::vector<Prediction> PredictAll(std::span<const Utterance> utterances,
                                     std::size_t batch_size = 64) const;

  const SystemConfig& config() const { return config_; }
  const TokenVocabulary& vocabulary() const { return vocab_; }
  nn::ParameterStore& params() { return *store_; }
  const nn::ParameterStore& params() const { return *store_; }
  const LmEncoder* lm() const { return lm_ ? &*lm_ : nullptr; }
  LmEncoder* mutable_lm() { return lm_ ? &*lm_ : nullptr; }
  const ScalarMixLayer* mix() const { return mix_ ? &*mix_ : nullptr; }
  const EmbeddingTable* embeddings() const { return embeddings_ ? &*embeddings_ : nullptr; }
  const std::string& embeddings_fingerprint() const { return embeddings_fingerprint_; }
  std::size_t classifier_input_dim() const { return classifier_input_dim_; }

 private:
  PhraseBreakModel() = default;

  SystemConfig config_;
  TokenVocabulary vocab_;
  std::unique_ptr<nn::ParameterStore> store_;
  std::optional<EmbeddingTable> embeddings_;
  std::string embeddings_fingerprint_;
  std::optional<BiLstmEncoder> bilstm_;
  std::optional<LmEncoder> lm_;
  std::optional<ScalarMixLayer> mix_;
  std::size_t classifier_input_dim_ = 0;
  nn::Parameter* hidden_w_ = nullptr;
  nn::Parameter* hidden_b_ = nullptr;
  nn::Parameter* out_w_ = nullptr;
  nn::Parameter* out_b_ = nullptr;
};

// Surfaces of the training utterances, in first-seen order.
TokenVocabulary BuildVocabulary(std::span<const Utterance> utterances);

}  // namespace pbp

#endif  // PBP_MODEL_H_
