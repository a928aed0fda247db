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

// A BERT-compatible transformer encoder that reads checkpoints in the common
// directory layout (config.json, vocab.txt, model.safetensors) and exposes
// every layer's hidden states for the layer mix.

#ifndef PBP_LM_ENCODER_H_
#define PBP_LM_ENCODER_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/autograd.h"
#include "pbp/lexfeat.h"
#include "pbp/safetensors.h"
#include "pbp/util.h"
#include "pbp/wordpiece.h"

namespace pbp {

struct BertConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_size = 768;
  std::size_t num_hidden_layers = 12;
  std::size_t num_attention_heads = 12;
  std::size_t intermediate_size = 3072;
  std::size_t max_position_embeddings = 512;
  std::size_t type_vocab_size = 2;
  double layer_norm_eps = 1e-12;

  static BertConfig FromJson(std::string_view json, std::string_view source = "config.json");
  std::string ToJson() const;
};

// Subword ids and their alignment to annotated word tokens.
struct SubwordEncoding {
  std::vector<int> ids;
  SubwordAlignment alignment;
};

class LmEncoder {
 public:
  LmEncoder() = default;
  // Randomly initialized weights under "lm." in `store`.
  LmEncoder(const BertConfig& config, WordPieceTokenizer tokenizer, bool finetune,
            nn::ParameterStore& store, Rng& rng);

  // Builds the encoder from a checkpoint directory.
  static LmEncoder Load(const std::filesystem::path& dir, bool finetune,
                        nn::ParameterStore& store);

  // Copies weights named as in the checkpoint (an optional "bert." prefix is
  // accepted). Every encoder weight must be present.
  void LoadWeights(const TensorFile& file);

  // One (subword_count x hidden) matrix per transformer layer. Boundary
  // markers are added internally and removed from the outputs; the
  // embedding-layer output is not included.
  std::vector<nn::Expr> Encode(nn::Graph& g, std::span<const int> subword_ids) const;
  std::vector<Matrix> EncodeValues(std::span<const int> subword_ids) const;

  // Tokenizes each word's surface and aligns the pieces back to the words.
  SubwordEncoding Tokenize(std::span<const AnnotatedToken> tokens) const;

  const BertConfig& config() const { return config_; }
  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }
  std::size_t max_subwords() const { return config_.max_position_embeddings - 2; }
  std::size_t layer_count() const { return config_.num_hidden_layers; }
  std::size_t hidden_dim() const { return config_.hidden_size; }
  bool finetune() const { return finetune_; }
  // Identifies config, vocabulary and weights; set by Load().
  const std::string& fingerprint() const { return fingerprint_; }
  void set_fingerprint(std::string fingerprint) { fingerprint_ = std::move(fingerprint); }
  // Names of this encoder's parameters in the store.
  std::vector<std::string> ParameterNames() const;

 private:
  struct Layer {
    nn::Parameter *q_w, *q_b, *k_w, *k_b, *v_w, *v_b;
    nn::Parameter *attn_out_w, *attn_out_b, *attn_ln_w, *attn_ln_b;
    nn::Parameter *inter_w, *inter_b, *out_w, *out_b, *out_ln_w, *out_ln_b;
  };

  nn::Parameter* AddParam(nn::ParameterStore& store, const std::string& name, Matrix init);

  BertConfig config_;
  WordPieceTokenizer tokenizer_;
  bool finetune_ = true;
  std::string fingerprint_;
  std::vector<std::pair<std::string, nn::Parameter*>> params_;  // checkpoint name, param
  nn::Parameter* word_embeddings_ = nullptr;
  nn::Parameter* position_embeddings_ = nullptr;
  nn::Parameter* token_type_embeddings_ = nullptr;
  nn::Parameter* emb_ln_w_ = nullptr;
  nn::Parameter* emb_ln_b_ = nullptr;
  std::vector<Layer> layers_;
};

}  // namespace pbp

#endif  // PBP_LM_ENCODER_H_
