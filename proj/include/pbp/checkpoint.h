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

// Checkpoint archives: a tar file holding the system configuration with its
// decision threshold (config.txt), all learnable parameters as F64
// safetensors (params.safetensors), the token vocabulary, and fingerprints
// of the annotator, LM and word-vector table. A frozen LM is not copied;
// it is reloaded from its checkpoint directory and its fingerprint checked.
// A fine-tuned LM is stored in full together with its config and vocabulary.

#ifndef PBP_CHECKPOINT_H_
#define PBP_CHECKPOINT_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pbp/model.h"

namespace pbp {

struct CheckpointFingerprints {
  std::string annotator;
  std::string lm;
  std::string embeddings;
};

std::string SerializeCheckpoint(const PhraseBreakModel& model,
                                const std::string& annotator_fingerprint);
void SaveCheckpoint(const PhraseBreakModel& model, const std::filesystem::path& path,
                    const std::string& annotator_fingerprint);

struct CheckpointLoadOptions {
  // Fingerprint of the annotator that will produce inputs; empty skips the check.
  std::string annotator_fingerprint;
  // Mismatched fingerprints throw instead of adding a warning.
  bool strict = false;
  // Replacement locations for external resources; empty keeps the stored ones.
  std::string lm_dir;
  std::string embeddings_path;
};

struct LoadedCheckpoint {
  std::unique_ptr<PhraseBreakModel> model;
  CheckpointFingerprints fingerprints;
  std::vector<std::string> warnings;
};

LoadedCheckpoint ParseCheckpoint(std::string_view bytes, const CheckpointLoadOptions& options,
                                 std::string_view source = "<memory>");
LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path,
                                const CheckpointLoadOptions& options = {});

}  // namespace pbp

#endif  // PBP_CHECKPOINT_H_
