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

// Feature extractors: the explicit BiLSTM over token and linguistic-feature
// embeddings, the layer mix applied to language-model outputs, subword to
// word pooling, and column fusion of the two feature streams.

#ifndef PBP_ENCODERS_H_
#define PBP_ENCODERS_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbp/autograd.h"
#include "pbp/lexfeat.h"
#include "pbp/matrix.h"
#include "pbp/util.h"

namespace pbp {

struct BiLstmEncoderConfig {
  std::size_t layers = 2;
  std::size_t hidden_per_direction = 256;
  std::size_t token_embedding_dim = 128;
  std::size_t feature_embedding_dim = 32;
  bool use_linguistic_features = false;
  bool use_pretrained_word_embeddings = false;

  void Validate() const;
  std::size_t output_dim() const { return 2 * hidden_per_direction; }
};

struct LmEncoderConfig {
  std::string checkpoint_id;  // directory holding config.json, vocab.txt, model.safetensors
  std::size_t layer_count = 12;
  std::size_t hidden_dim = 768;
  bool finetune = true;

  void Validate() const;
};

enum class PoolingMode { kMean, kFirstSubword };

std::string_view PoolingName(PoolingMode mode);
PoolingMode ParsePooling(std::string_view name);

// Surface vocabulary of the learned token embedding. Id 0 is reserved for
// surfaces not seen in training.
class TokenVocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  TokenVocabulary();
  // Entries after the reserved unknown; duplicates are dropped.
  explicit TokenVocabulary(std::span<const std::string> words);

  int IdOf(std::string_view surface) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  std::string Serialize() const;
  static TokenVocabulary Parse(std::string_view text);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Explicit-encoder inputs for a padded batch, time-major: position t of
// sequence b lives at row t * batch_size + b.
struct ExplicitBatch {
  std::size_t batch_size = 0;
  std::size_t max_length = 0;
  std::vector<std::size_t> lengths;
  std::vector<Scalar> mask;  // 1 at real positions, 0 at padding
  std::vector<int> token_ids;
  std::vector<int> pos_ids;
  std::vector<int> rel_ids;
  std::vector<int> distance_ids;
  Matrix pretrained;  // rows() x dim with zero padding rows; empty when unused

  std::size_t rows() const { return batch_size * max_length; }
  std::size_t Row(std::size_t t, std::size_t b) const { return t * batch_size + b; }
};

// `pretrained` may be null; otherwise each sequence's tokens are looked up.
ExplicitBatch MakeExplicitBatch(std::span<const std::span<const AnnotatedToken>> sequences,
                                const TokenVocabulary& vocab,
                                const EmbeddingTable* pretrained);

class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  // Registers freshly initialized parameters under `prefix` in `store`.
  BiLstmEncoder(const BiLstmEncoderConfig& config, std::size_t vocab_size,
                std::size_t pretrained_dim, nn::ParameterStore& store, Rng& rng,
                const std::string& prefix = "bilstm.");

  // (rows() x output_dim) last-layer states; padding rows carry the last
  // real state and must be masked by the caller.
  nn::Expr Encode(nn::Graph& g, const ExplicitBatch& batch) const;

  // Single sequence convenience: token_count x output_dim.
  Matrix EncodeTokens(std::span<const AnnotatedToken> tokens, const TokenVocabulary& vocab,
                      const Matrix* pretrained = nullptr) const;

  const BiLstmEncoderConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return config_.output_dim(); }

 private:
  struct Direction {
    nn::Parameter* w_ih;  // input_dim x 4H, gate order i f g o
    nn::Parameter* w_hh;  // H x 4H
    nn::Parameter* bias;  // 1 x 4H
  };

  std::vector<nn::Expr> RunDirection(nn::Graph& g, const Direction& dir, nn::Expr inputs,
                                     const ExplicitBatch& batch, bool reverse) const;

  BiLstmEncoderConfig config_;
  std::size_t pretrained_dim_ = 0;
  std::size_t input_dim_ = 0;
  nn::Parameter* token_embedding_ = nullptr;
  nn::Parameter* pos_embedding_ = nullptr;
  nn::Parameter* rel_embedding_ = nullptr;
  nn::Parameter* distance_embedding_ = nullptr;
  std::vector<Direction> forward_;
  std::vector<Direction> backward_;
};

struct ScalarMix {
  std::vector<Scalar> raw_weights;
  Scalar gamma = 1.0;

  std::vector<Scalar> Normalized() const;
};

// Learnable mix parameters: raw weights start equal, gamma at 1.
class ScalarMixLayer {
 public:
  ScalarMixLayer() = default;
  ScalarMixLayer(std::size_t layer_count, nn::ParameterStore& store,
                 const std::string& prefix = "mix.");

  nn::Expr Apply(nn::Graph& g, std::span<const nn::Expr> layers) const;
  ScalarMix Current() const;

 private:
  nn::Parameter* weights_ = nullptr;
  nn::Parameter* gamma_ = nullptr;
};

Matrix MixLayers(std::span<const Matrix> layers, const ScalarMix& mix);

// Spans must partition [0, rows of the subword matrix).
nn::Expr PoolToWords(nn::Expr subwords, const SubwordAlignment& alignment,
                     PoolingMode mode = PoolingMode::kMean);
Matrix PoolToWords(const Matrix& subwords, const SubwordAlignment& alignment,
                   PoolingMode mode = PoolingMode::kMean);

nn::Expr Fuse(nn::Expr explicit_features, nn::Expr implicit_features);
Matrix Fuse(const Matrix& explicit_features, const Matrix& implicit_features);

}  // namespace pbp

#endif  // PBP_ENCODERS_H_
