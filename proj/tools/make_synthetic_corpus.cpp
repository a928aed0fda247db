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

// Writes a seeded synthetic labeled corpus in the corpus TSV format.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pbp/corpus.h"
#include "pbp/error.h"
#include "pbp/synthetic.h"

int main(int argc, char** argv) {
  pbp::SyntheticCorpusOptions o;
  std::string out;
  CLI::App app{"Synthetic phrase-break corpus", "make_synthetic_corpus"};
  app.add_option("--out", out, "Output TSV")->required();
  app.add_option("--utterances", o.utterances)->capture_default_str();
  app.add_option("--conjunction-rate", o.conjunction_rate)->capture_default_str();
  app.add_option("--topic-comma-rate", o.topic_comma_rate)->capture_default_str();
  app.add_option("--max-clauses", o.max_clauses)->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--id-prefix", o.id_prefix)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    pbp::WriteCorpus(pbp::MakeSyntheticCorpus(o), out);
  } catch (const pbp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
