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

// Parallel kernels against the serial reference, plus end-to-end
// prediction throughput.

#include <benchmark/benchmark.h>

#include <random>

#include "pbp/kernels.h"
#include "pbp/model.h"
#include "pbp/synthetic.h"

namespace pbp {
namespace {

Matrix Random(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<Scalar> d(-1, 1);
  Matrix m(r, c);
  for (Scalar& v : m.values()) v = d(gen);
  return m;
}

template <auto Kernel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = Random(n, n, 1), b = Random(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Kernel(false, false, 1.0, a, b, 0.0, &c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Gemm<kernels::Gemm>)->Name("gemm/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_Gemm<kernels::serial::Gemm>)->Name("gemm/serial")->Arg(64)->Arg(256)->Arg(512);

template <auto Kernel>
void BM_GemmNT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = Random(n, n, 1), b = Random(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Kernel(false, true, 1.0, a, b, 0.0, &c);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_GemmNT<kernels::Gemm>)->Name("gemm_nt/parallel")->Arg(256);
BENCHMARK(BM_GemmNT<kernels::serial::Gemm>)->Name("gemm_nt/serial")->Arg(256);

template <auto Kernel>
void BM_Softmax(benchmark::State& state) {
  const Matrix x = Random(static_cast<std::size_t>(state.range(0)), 128, 3);
  Matrix y;
  for (auto _ : state) {
    Kernel(x, &y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Softmax<kernels::SoftmaxRows>)->Name("softmax/parallel")->Arg(2048);
BENCHMARK(BM_Softmax<kernels::serial::SoftmaxRows>)->Name("softmax/serial")->Arg(2048);

template <auto Kernel>
void BM_LayerNorm(benchmark::State& state) {
  const Matrix x = Random(static_cast<std::size_t>(state.range(0)), 768, 4);
  const std::vector<Scalar> gamma(768, 1.0), beta(768, 0.0);
  Matrix y;
  std::vector<Scalar> rstd;
  for (auto _ : state) {
    Kernel(x, gamma, beta, 1e-12, &y, &rstd);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_LayerNorm<kernels::LayerNormRows>)->Name("layernorm/parallel")->Arg(512);
BENCHMARK(BM_LayerNorm<kernels::serial::LayerNormRows>)->Name("layernorm/serial")->Arg(512);

template <auto Kernel>
void BM_Gelu(benchmark::State& state) {
  const Matrix x = Random(1, static_cast<std::size_t>(state.range(0)), 5);
  std::vector<Scalar> y(x.size());
  for (auto _ : state) {
    Kernel(x.values(), y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Gelu<kernels::Gelu>)->Name("gelu/parallel")->Arg(1 << 18);
BENCHMARK(BM_Gelu<kernels::serial::Gelu>)->Name("gelu/serial")->Arg(1 << 18);

// Batched prediction over a synthetic corpus with default BiLSTM sizes.
void BM_PredictAll(benchmark::State& state) {
  SyntheticCorpusOptions o;
  o.utterances = 64;
  const auto corpus = MakeSyntheticCorpus(o);
  const auto model = PhraseBreakModel::Create(SystemConfig::ForKind(SystemKind::kBiLstmFeatures),
                                              BuildVocabulary(corpus), 1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  std::size_t tokens = 0;
  for (const auto& u : corpus) tokens += u.size();
  for (auto _ : state) {
    auto preds = model->PredictAll(corpus, batch);
    benchmark::DoNotOptimize(preds.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tokens));
}
BENCHMARK(BM_PredictAll)->Name("predict_all/batch")->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pbp

BENCHMARK_MAIN();
