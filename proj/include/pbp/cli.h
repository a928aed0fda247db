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

// The `pbp` command line: corpus, train, predict and eval subcommands.

#ifndef PBP_CLI_H_
#define PBP_CLI_H_

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbp/corpus.h"
#include "pbp/lexfeat.h"

namespace pbp {

inline constexpr std::string_view kPauseMarker = "<pause/>";

// Space-separated surfaces with the marker glued to every token followed by
// a break. The final token never carries one.
std::string FormatMarkup(std::span<const AnnotatedToken> tokens, std::span<const int> labels);

// An utterance from a prediction TSV: surfaces plus the last column.
struct PredictedUtterance {
  std::string id;
  std::vector<std::string> surfaces;
  std::vector<int> labels;
};

std::vector<PredictedUtterance> ParsePredictions(std::string_view text,
                                                 std::string_view source = "<memory>");

// `args` excludes the program name. Returns the process exit code: 0 on
// success, 2 for usage errors and missing inputs, 1 otherwise.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbp

#endif  // PBP_CLI_H_
