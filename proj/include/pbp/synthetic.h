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

// Seeded generator of small labeled Japanese-like corpora for smoke runs and
// tests. Sentences are built from noun+particle chunks and a predicate per
// clause. Every non-final punctuation token is followed by a break, and a
// seeded fraction of chunk boundaries receive a conjunction that is also
// followed by a break. The sentence-final full stop is labeled 0.

#ifndef PBP_SYNTHETIC_H_
#define PBP_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pbp/corpus.h"

namespace pbp {

struct SyntheticCorpusOptions {
  std::size_t utterances = 500;
  double conjunction_rate = 0.10;
  double topic_comma_rate = 0.3;
  std::size_t max_clauses = 3;
  std::size_t max_chunks = 3;
  std::uint64_t seed = 1;
  std::string id_prefix = "syn";
};

std::vector<Utterance> MakeSyntheticCorpus(const SyntheticCorpusOptions& options);

// Every surface the generator can emit, for building test vocabularies.
std::vector<std::string> SyntheticSurfaces();

}  // namespace pbp

#endif  // PBP_SYNTHETIC_H_
