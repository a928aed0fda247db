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

#include "pbp/encoders.h"

#include <algorithm>
#include <cmath>

#include "pbp/error.h"

namespace pbp {

namespace {

Matrix UniformMatrix(std::size_t rows, std::size_t cols, Scalar bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Scalar& v : m.values()) v = rng.Uniform(-bound, bound);
  return m;
}

void RequirePositive(std::size_t v, const char* what) {
  if (v == 0) throw InvalidInput(std::string(what) + " must be positive");
}

}  // namespace

void BiLstmEncoderConfig::Validate() const {
  RequirePositive(layers, "bilstm layers");
  RequirePositive(hidden_per_direction, "bilstm hidden_per_direction");
  RequirePositive(token_embedding_dim, "bilstm token_embedding_dim");
  RequirePositive(feature_embedding_dim, "bilstm feature_embedding_dim");
}

void LmEncoderConfig::Validate() const {
  RequirePositive(layer_count, "lm layer_count");
  RequirePositive(hidden_dim, "lm hidden_dim");
}

std::string_view PoolingName(PoolingMode mode) {
  return mode == PoolingMode::kMean ? "mean" : "first";
}

PoolingMode ParsePooling(std::string_view name) {
  if (name == "mean") return PoolingMode::kMean;
  if (name == "first") return PoolingMode::kFirstSubword;
  throw InvalidInput("unknown pooling mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

TokenVocabulary::TokenVocabulary() {
  words_.emplace_back(kUnknown);
  index_.emplace(std::string(kUnknown), 0);
}

TokenVocabulary::TokenVocabulary(std::span<const std::string> words) : TokenVocabulary() {
  for (const std::string& w : words) {
    if (index_.emplace(w, static_cast<int>(words_.size())).second) words_.push_back(w);
  }
}

int TokenVocabulary::IdOf(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? 0 : it->second;
}

std::string TokenVocabulary::Serialize() const {
  std::string out;
  for (std::size_t i = 1; i < words_.size(); ++i) {
    out += words_[i];
    out += '\n';
  }
  return out;
}

TokenVocabulary TokenVocabulary::Parse(std::string_view text) {
  std::vector<std::string> words;
  for (const std::string& line : Split(text, '\n')) {
    if (!line.empty()) words.push_back(line);
  }
  return TokenVocabulary(words);
}

// ---------------------------------------------------------------------------

ExplicitBatch MakeExplicitBatch(std::span<const std::span<const AnnotatedToken>> sequences,
                                const TokenVocabulary& vocab,
                                const EmbeddingTable* pretrained) {
  ExplicitBatch b;
  b.batch_size = sequences.size();
  for (const auto& s : sequences) {
    b.lengths.push_back(s.size());
    b.max_length = std::max(b.max_length, s.size());
  }
  const std::size_t rows = b.rows();
  b.mask.assign(rows, 0.0);
  b.token_ids.assign(rows, -1);
  b.pos_ids.assign(rows, -1);
  b.rel_ids.assign(rows, -1);
  b.distance_ids.assign(rows, -1);
  if (pretrained != nullptr) b.pretrained = Matrix(rows, pretrained->dimension());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& tokens = sequences[s];
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::size_t r = b.Row(t, s);
      const AnnotatedToken& tok = tokens[t];
      b.mask[r] = 1.0;
      b.token_ids[r] = vocab.IdOf(tok.surface);
      b.pos_ids[r] = static_cast<int>(tok.pos);
      b.rel_ids[r] = static_cast<int>(tok.dep_rel);
      b.distance_ids[r] = HeadDistanceBucket(static_cast<int>(t), tok.dep_head);
      if (pretrained != nullptr) {
        const Matrix& v = pretrained->vectors();
        const std::size_t src = pretrained->RowOf(tok.surface);
        std::copy(v.row(src), v.row(src) + v.cols(), b.pretrained.row(r));
      }
    }
  }
  return b;
}

// ---------------------------------------------------------------------------

BiLstmEncoder::BiLstmEncoder(const BiLstmEncoderConfig& config, std::size_t vocab_size,
                             std::size_t pretrained_dim, nn::ParameterStore& store, Rng& rng,
                             const std::string& prefix)
    : config_(config) {
  config_.Validate();
  if (config_.use_pretrained_word_embeddings) {
    if (pretrained_dim == 0) {
      throw InvalidInput("bilstm: pretrained word embeddings enabled but no table supplied");
    }
    pretrained_dim_ = pretrained_dim;
  }
  const std::size_t fd = config_.feature_embedding_dim;
  const Scalar emb_bound = 0.1;
  token_embedding_ = &store.Add(prefix + "token_embedding",
                                UniformMatrix(vocab_size, config_.token_embedding_dim, emb_bound, rng));
  input_dim_ = config_.token_embedding_dim + pretrained_dim_;
  if (config_.use_linguistic_features) {
    pos_embedding_ = &store.Add(prefix + "pos_embedding", UniformMatrix(kPosCount, fd, emb_bound, rng));
    rel_embedding_ = &store.Add(prefix + "rel_embedding", UniformMatrix(kDepRelCount, fd, emb_bound, rng));
    distance_embedding_ = &store.Add(prefix + "distance_embedding",
                                     UniformMatrix(kHeadDistanceBuckets, fd, emb_bound, rng));
    input_dim_ += 3 * fd;
  }
  const std::size_t h = config_.hidden_per_direction;
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(h));
  std::size_t in = input_dim_;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (int d = 0; d < 2; ++d) {
      const std::string p = prefix + "l" + std::to_string(l) + (d == 0 ? ".fw." : ".bw.");
      Direction dir;
      dir.w_ih = &store.Add(p + "w_ih", UniformMatrix(in, 4 * h, bound, rng));
      dir.w_hh = &store.Add(p + "w_hh", UniformMatrix(h, 4 * h, bound, rng));
      Matrix bias(1, 4 * h);
      for (std::size_t j = h; j < 2 * h; ++j) bias(0, j) = 1.0;  // forget gate
      dir.bias = &store.Add(p + "bias", std::move(bias));
      (d == 0 ? forward_ : backward_).push_back(dir);
    }
    in = 2 * h;
  }
}

std::vector<nn::Expr> BiLstmEncoder::RunDirection(nn::Graph& g, const Direction& dir,
                                                  nn::Expr inputs, const ExplicitBatch& batch,
                                                  bool reverse) const {
  const std::size_t bs = batch.batch_size;
  const std::size_t steps = batch.max_length;
  const std::size_t h = config_.hidden_per_direction;
  const nn::Expr xw = nn::AddRow(nn::MatMul(inputs, g.Param(*dir.w_ih)), g.Param(*dir.bias));
  const nn::Expr w_hh = g.Param(*dir.w_hh);
  nn::Expr hs = g.Constant(Matrix(bs, h));
  nn::Expr cs = g.Constant(Matrix(bs, h));
  std::vector<nn::Expr> outs(steps);
  const std::span<const Scalar> mask(batch.mask);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const auto m = mask.subspan(t * bs, bs);
    const nn::Expr gates = nn::Add(nn::SliceRows(xw, t * bs, bs), nn::MatMul(hs, w_hh));
    const nn::Expr i = nn::Sigmoid(nn::SliceCols(gates, 0, h));
    const nn::Expr f = nn::Sigmoid(nn::SliceCols(gates, h, h));
    const nn::Expr c_hat = nn::Tanh(nn::SliceCols(gates, 2 * h, h));
    const nn::Expr o = nn::Sigmoid(nn::SliceCols(gates, 3 * h, h));
    const nn::Expr c_new = nn::Add(nn::Mul(f, cs), nn::Mul(i, c_hat));
    const nn::Expr h_new = nn::Mul(o, nn::Tanh(c_new));
    cs = nn::Blend(m, c_new, cs);
    hs = nn::Blend(m, h_new, hs);
    outs[t] = hs;
  }
  return outs;
}

nn::Expr BiLstmEncoder::Encode(nn::Graph& g, const ExplicitBatch& batch) const {
  if (token_embedding_ == nullptr) throw InvalidInput("bilstm: encoder not initialized");
  if (batch.rows() == 0) throw InvalidInput("bilstm: empty batch");
  std::vector<nn::Expr> parts;
  parts.push_back(nn::Lookup(g.Param(*token_embedding_), batch.token_ids));
  if (pretrained_dim_ > 0) {
    if (batch.pretrained.rows() != batch.rows() || batch.pretrained.cols() != pretrained_dim_) {
      throw ShapeError("bilstm: pretrained embeddings " + batch.pretrained.ShapeString() +
                       ", expected " + std::to_string(batch.rows()) + "x" +
                       std::to_string(pretrained_dim_));
    }
    parts.push_back(g.Constant(batch.pretrained));
  }
  if (config_.use_linguistic_features) {
    parts.push_back(nn::Lookup(g.Param(*pos_embedding_), batch.pos_ids));
    parts.push_back(nn::Lookup(g.Param(*rel_embedding_), batch.rel_ids));
    parts.push_back(nn::Lookup(g.Param(*distance_embedding_), batch.distance_ids));
  }
  nn::Expr x = parts.size() == 1 ? parts[0] : nn::ConcatCols(parts);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const auto fw = RunDirection(g, forward_[l], x, batch, false);
    const auto bw = RunDirection(g, backward_[l], x, batch, true);
    const nn::Expr both[] = {nn::ConcatRows(fw), nn::ConcatRows(bw)};
    x = nn::ConcatCols(both);
  }
  return x;
}

Matrix BiLstmEncoder::EncodeTokens(std::span<const AnnotatedToken> tokens,
                                   const TokenVocabulary& vocab, const Matrix* pretrained) const {
  const std::span<const AnnotatedToken> one[] = {tokens};
  ExplicitBatch batch = MakeExplicitBatch(one, vocab, nullptr);
  if (pretrained != nullptr) {
    if (pretrained->rows() != tokens.size()) {
      throw ShapeError("bilstm: " + std::to_string(pretrained->rows()) +
                       " pretrained rows for " + std::to_string(tokens.size()) + " tokens");
    }
    batch.pretrained = *pretrained;
  }
  nn::Graph g;
  return Encode(g, batch).value();
}

// ---------------------------------------------------------------------------

std::vector<Scalar> ScalarMix::Normalized() const {
  if (raw_weights.empty()) return {};
  const Scalar mx = *std::max_element(raw_weights.begin(), raw_weights.end());
  std::vector<Scalar> w(raw_weights.size());
  Scalar total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(raw_weights[k] - mx);
    total += w[k];
  }
  for (Scalar& v : w) v /= total;
  return w;
}

ScalarMixLayer::ScalarMixLayer(std::size_t layer_count, nn::ParameterStore& store,
                               const std::string& prefix) {
  RequirePositive(layer_count, "mix layer_count");
  weights_ = &store.Add(prefix + "weights", Matrix(1, layer_count));
  gamma_ = &store.Add(prefix + "gamma", Matrix(1, 1, 1.0));
}

nn::Expr ScalarMixLayer::Apply(nn::Graph& g, std::span<const nn::Expr> layers) const {
  if (layers.size() != weights_->value.cols()) {
    throw ShapeError("mix: " + std::to_string(layers.size()) + " layers for " +
                     std::to_string(weights_->value.cols()) + " weights");
  }
  return nn::ScalarMix(layers, g.Param(*weights_), g.Param(*gamma_));
}

ScalarMix ScalarMixLayer::Current() const {
  ScalarMix mix;
  const auto w = weights_->value.values();
  mix.raw_weights.assign(w.begin(), w.end());
  mix.gamma = gamma_->value(0, 0);
  return mix;
}

Matrix MixLayers(std::span<const Matrix> layers, const ScalarMix& mix) {
  if (layers.empty()) throw InvalidInput("mix: no layers");
  nn::Graph g;
  std::vector<nn::Expr> exprs;
  for (const Matrix& m : layers) exprs.push_back(g.Constant(m));
  const nn::Expr w = g.Constant(Matrix(1, mix.raw_weights.size(), mix.raw_weights));
  const nn::Expr gamma = g.Constant(Matrix(1, 1, mix.gamma));
  return nn::ScalarMix(exprs, w, gamma).value();
}

nn::Expr PoolToWords(nn::Expr subwords, const SubwordAlignment& alignment, PoolingMode mode) {
  std::size_t next = 0;
  for (const nn::Span& s : alignment.spans) {
    if (s.begin != next || s.end <= s.begin) {
      throw AlignmentError("pooling: spans do not partition the subword rows at row " +
                           std::to_string(next));
    }
    next = s.end;
  }
  if (next != subwords.rows()) {
    throw AlignmentError("pooling: spans cover " + std::to_string(next) + " of " +
                         std::to_string(subwords.rows()) + " subword rows");
  }
  if (mode == PoolingMode::kMean) return nn::SpanMean(subwords, alignment.spans);
  std::vector<nn::RowRef> refs;
  for (const nn::Span& s : alignment.spans) refs.push_back({0, static_cast<int>(s.begin)});
  const nn::Expr sources[] = {subwords};
  return nn::GatherRows(sources, refs);
}

Matrix PoolToWords(const Matrix& subwords, const SubwordAlignment& alignment, PoolingMode mode) {
  nn::Graph g;
  return PoolToWords(g.Constant(subwords), alignment, mode).value();
}

nn::Expr Fuse(nn::Expr explicit_features, nn::Expr implicit_features) {
  const nn::Expr parts[] = {explicit_features, implicit_features};
  return nn::ConcatCols(parts);
}

Matrix Fuse(const Matrix& explicit_features, const Matrix& implicit_features) {
  nn::Graph g;
  return Fuse(g.Constant(explicit_features), g.Constant(implicit_features)).value();
}

}  // namespace pbp
