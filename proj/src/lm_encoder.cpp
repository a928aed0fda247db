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

#include "pbp/lm_encoder.h"

#include <cmath>

#include "json.hpp"
#include "pbp/error.h"

namespace pbp {

namespace {

std::size_t GetSize(const nlohmann::json& j, const char* key, std::size_t fallback) {
  return j.contains(key) ? j.at(key).get<std::size_t>() : fallback;
}

nn::Expr Linear(nn::Graph& g, nn::Expr x, nn::Parameter* w, nn::Parameter* b) {
  return nn::AddRow(nn::MatMulNT(x, g.Param(*w)), g.Param(*b));
}

std::vector<std::string> CheckpointAliases(const std::string& name) {
  std::vector<std::string> out = {name, "bert." + name};
  const auto swap_suffix = [&](std::string_view from, std::string_view to) {
    if (name.size() > from.size() && name.ends_with(from)) {
      const std::string alt = name.substr(0, name.size() - from.size()) + std::string(to);
      out.push_back(alt);
      out.push_back("bert." + alt);
    }
  };
  swap_suffix("LayerNorm.weight", "LayerNorm.gamma");
  swap_suffix("LayerNorm.bias", "LayerNorm.beta");
  return out;
}

}  // namespace

BertConfig BertConfig::FromJson(std::string_view json, std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
  BertConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.hidden_size = GetSize(j, "hidden_size", c.hidden_size);
    c.num_hidden_layers = GetSize(j, "num_hidden_layers", c.num_hidden_layers);
    c.num_attention_heads = GetSize(j, "num_attention_heads", c.num_attention_heads);
    c.intermediate_size = GetSize(j, "intermediate_size", c.intermediate_size);
    c.max_position_embeddings = GetSize(j, "max_position_embeddings", c.max_position_embeddings);
    c.type_vocab_size = GetSize(j, "type_vocab_size", c.type_vocab_size);
    if (j.contains("layer_norm_eps")) c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    if (j.contains("hidden_act") && j.at("hidden_act").get<std::string>() != "gelu") {
      throw InvalidInput(std::string(source) + ": unsupported hidden_act '" +
                         j.at("hidden_act").get<std::string>() + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
  if (c.num_attention_heads == 0 || c.hidden_size % c.num_attention_heads != 0) {
    throw InvalidInput(std::string(source) + ": hidden_size not divisible by head count");
  }
  if (c.max_position_embeddings < 3 || c.type_vocab_size == 0 || c.num_hidden_layers == 0) {
    throw InvalidInput(std::string(source) + ": degenerate encoder dimensions");
  }
  return c;
}

std::string BertConfig::ToJson() const {
  nlohmann::json j = {
      {"model_type", "bert"},
      {"vocab_size", vocab_size},
      {"hidden_size", hidden_size},
      {"num_hidden_layers", num_hidden_layers},
      {"num_attention_heads", num_attention_heads},
      {"intermediate_size", intermediate_size},
      {"max_position_embeddings", max_position_embeddings},
      {"type_vocab_size", type_vocab_size},
      {"layer_norm_eps", layer_norm_eps},
      {"hidden_act", "gelu"},
  };
  return j.dump(2);
}

nn::Parameter* LmEncoder::AddParam(nn::ParameterStore& store, const std::string& name,
                                   Matrix init) {
  nn::Parameter* p = &store.Add("lm." + name, std::move(init), finetune_);
  params_.emplace_back(name, p);
  return p;
}

LmEncoder::LmEncoder(const BertConfig& config, WordPieceTokenizer tokenizer, bool finetune,
                     nn::ParameterStore& store, Rng& rng)
    : config_(config), tokenizer_(std::move(tokenizer)), finetune_(finetune) {
  if (tokenizer_.vocab_size() != config_.vocab_size) {
    throw InvalidInput("lm: vocabulary has " + std::to_string(tokenizer_.vocab_size()) +
                       " entries but config declares " + std::to_string(config_.vocab_size));
  }
  const std::size_t h = config_.hidden_size;
  const std::size_t inter = config_.intermediate_size;
  const Scalar bound = 0.02 * std::sqrt(3.0);
  auto random = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (Scalar& v : m.values()) v = rng.Uniform(-bound, bound);
    return m;
  };
  word_embeddings_ = AddParam(store, "embeddings.word_embeddings.weight", random(config_.vocab_size, h));
  position_embeddings_ = AddParam(store, "embeddings.position_embeddings.weight",
                                  random(config_.max_position_embeddings, h));
  token_type_embeddings_ = AddParam(store, "embeddings.token_type_embeddings.weight",
                                    random(config_.type_vocab_size, h));
  emb_ln_w_ = AddParam(store, "embeddings.LayerNorm.weight", Matrix(1, h, 1.0));
  emb_ln_b_ = AddParam(store, "embeddings.LayerNorm.bias", Matrix(1, h));
  for (std::size_t l = 0; l < config_.num_hidden_layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    Layer layer;
    layer.q_w = AddParam(store, p + "attention.self.query.weight", random(h, h));
    layer.q_b = AddParam(store, p + "attention.self.query.bias", Matrix(1, h));
    layer.k_w = AddParam(store, p + "attention.self.key.weight", random(h, h));
    layer.k_b = AddParam(store, p + "attention.self.key.bias", Matrix(1, h));
    layer.v_w = AddParam(store, p + "attention.self.value.weight", random(h, h));
    layer.v_b = AddParam(store, p + "attention.self.value.bias", Matrix(1, h));
    layer.attn_out_w = AddParam(store, p + "attention.output.dense.weight", random(h, h));
    layer.attn_out_b = AddParam(store, p + "attention.output.dense.bias", Matrix(1, h));
    layer.attn_ln_w = AddParam(store, p + "attention.output.LayerNorm.weight", Matrix(1, h, 1.0));
    layer.attn_ln_b = AddParam(store, p + "attention.output.LayerNorm.bias", Matrix(1, h));
    layer.inter_w = AddParam(store, p + "intermediate.dense.weight", random(inter, h));
    layer.inter_b = AddParam(store, p + "intermediate.dense.bias", Matrix(1, inter));
    layer.out_w = AddParam(store, p + "output.dense.weight", random(h, inter));
    layer.out_b = AddParam(store, p + "output.dense.bias", Matrix(1, h));
    layer.out_ln_w = AddParam(store, p + "output.LayerNorm.weight", Matrix(1, h, 1.0));
    layer.out_ln_b = AddParam(store, p + "output.LayerNorm.bias", Matrix(1, h));
    layers_.push_back(layer);
  }
}

LmEncoder LmEncoder::Load(const std::filesystem::path& dir, bool finetune,
                          nn::ParameterStore& store) {
  const std::string config_text = ReadFile(dir / "config.json");
  const std::string vocab_text = ReadFile(dir / "vocab.txt");
  const std::string weights = ReadFile(dir / "model.safetensors");
  bool lower_case = false;
  if (std::filesystem::exists(dir / "tokenizer_config.json")) {
    try {
      const auto tc = nlohmann::json::parse(ReadFile(dir / "tokenizer_config.json"));
      lower_case = tc.value("do_lower_case", false);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError((dir / "tokenizer_config.json").string() + ": " + e.what());
    }
  }
  const BertConfig config = BertConfig::FromJson(config_text, (dir / "config.json").string());
  Rng unused(0);
  LmEncoder lm(config, WordPieceTokenizer::FromVocabFile(dir / "vocab.txt", lower_case),
               finetune, store, unused);
  lm.LoadWeights(ParseSafetensors(weights, (dir / "model.safetensors").string()));
  Fnv1a h;
  h.Update(config_text);
  h.Update(vocab_text);
  h.Update(weights);
  lm.fingerprint_ = "bert:" + h.hex();
  return lm;
}

void LmEncoder::LoadWeights(const TensorFile& file) {
  for (auto& [name, param] : params_) {
    const Tensor* found = nullptr;
    for (const std::string& alias : CheckpointAliases(name)) {
      auto it = file.tensors.find(alias);
      if (it != file.tensors.end()) {
        found = &it->second;
        break;
      }
    }
    if (found == nullptr) throw InvalidInput("lm checkpoint lacks tensor '" + name + "'");
    Matrix m = found->ToMatrix();
    if (!m.SameShape(param->value)) {
      throw ShapeError("lm tensor '" + name + "' is " + m.ShapeString() + ", expected " +
                       param->value.ShapeString());
    }
    param->value = std::move(m);
  }
}

std::vector<nn::Expr> LmEncoder::Encode(nn::Graph& g, std::span<const int> subword_ids) const {
  if (word_embeddings_ == nullptr) throw InvalidInput("lm: encoder not initialized");
  if (subword_ids.empty()) throw InvalidInput("lm: empty subword sequence");
  if (subword_ids.size() > max_subwords()) {
    throw InvalidInput("lm: overlength input of " + std::to_string(subword_ids.size()) +
                       " subwords; the encoder accepts at most " +
                       std::to_string(max_subwords()));
  }
  std::vector<int> ids;
  ids.reserve(subword_ids.size() + 2);
  ids.push_back(tokenizer_.cls_id());
  for (int id : subword_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw InvalidInput("lm: subword id " + std::to_string(id) + " outside vocabulary");
    }
    ids.push_back(id);
  }
  ids.push_back(tokenizer_.sep_id());
  const std::size_t len = ids.size();
  std::vector<int> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = static_cast<int>(i);
  const std::vector<int> types(len, 0);
  const double eps = config_.layer_norm_eps;

  nn::Expr x = nn::Add(nn::Add(nn::Lookup(g.Param(*word_embeddings_), ids),
                               nn::Lookup(g.Param(*position_embeddings_), positions)),
                       nn::Lookup(g.Param(*token_type_embeddings_), types));
  x = nn::LayerNorm(x, g.Param(*emb_ln_w_), g.Param(*emb_ln_b_), eps);

  const std::size_t heads = config_.num_attention_heads;
  const std::size_t dh = config_.hidden_size / heads;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dh));
  std::vector<nn::Expr> outputs;
  for (const Layer& layer : layers_) {
    const nn::Expr q = Linear(g, x, layer.q_w, layer.q_b);
    const nn::Expr k = Linear(g, x, layer.k_w, layer.k_b);
    const nn::Expr v = Linear(g, x, layer.v_w, layer.v_b);
    std::vector<nn::Expr> context;
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const nn::Expr qh = nn::SliceCols(q, hd * dh, dh);
      const nn::Expr kh = nn::SliceCols(k, hd * dh, dh);
      const nn::Expr vh = nn::SliceCols(v, hd * dh, dh);
      const nn::Expr probs = nn::SoftmaxRows(nn::Scale(nn::MatMulNT(qh, kh), scale));
      context.push_back(nn::MatMul(probs, vh));
    }
    const nn::Expr ctx = heads == 1 ? context[0] : nn::ConcatCols(context);
    const nn::Expr attn = Linear(g, ctx, layer.attn_out_w, layer.attn_out_b);
    x = nn::LayerNorm(nn::Add(attn, x), g.Param(*layer.attn_ln_w), g.Param(*layer.attn_ln_b), eps);
    const nn::Expr inter = nn::Gelu(Linear(g, x, layer.inter_w, layer.inter_b));
    const nn::Expr out = Linear(g, inter, layer.out_w, layer.out_b);
    x = nn::LayerNorm(nn::Add(out, x), g.Param(*layer.out_ln_w), g.Param(*layer.out_ln_b), eps);
    outputs.push_back(nn::SliceRows(x, 1, len - 2));
  }
  return outputs;
}

std::vector<Matrix> LmEncoder::EncodeValues(std::span<const int> subword_ids) const {
  nn::Graph g;
  std::vector<Matrix> out;
  for (const nn::Expr& e : Encode(g, subword_ids)) out.push_back(e.value());
  return out;
}

SubwordEncoding LmEncoder::Tokenize(std::span<const AnnotatedToken> tokens) const {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const AnnotatedToken& t : tokens) words.push_back(t.surface);
  auto enc = tokenizer_.Encode(words);
  if (enc.ids.size() > max_subwords()) {
    throw InvalidInput("lm: overlength input of " + std::to_string(enc.ids.size()) +
                       " subwords; the encoder accepts at most " +
                       std::to_string(max_subwords()));
  }
  SubwordEncoding out;
  out.alignment = AlignSubwords(tokens, enc.texts);
  out.ids = std::move(enc.ids);
  return out;
}

std::vector<std::string> LmEncoder::ParameterNames() const {
  std::vector<std::string> out;
  for (const auto& entry : params_) out.push_back(entry.second->name);
  return out;
}

}  // namespace pbp
