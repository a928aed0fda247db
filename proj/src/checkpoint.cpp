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

#include "pbp/checkpoint.h"

#include <map>
#include <set>

#include "pbp/archive.h"
#include "pbp/error.h"
#include "pbp/safetensors.h"
#include "pbp/util.h"

namespace pbp {

namespace {

constexpr std::string_view kFormat = "pbp-checkpoint/1";

bool IsLmParam(const std::string& name) { return StartsWith(name, "lm."); }

std::string FormatFingerprints(const CheckpointFingerprints& f) {
  return "annotator=" + f.annotator + "\nlm=" + f.lm + "\nembeddings=" + f.embeddings + "\n";
}

CheckpointFingerprints ParseFingerprints(std::string_view text) {
  CheckpointFingerprints f;
  for (const std::string& line : Split(text, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "annotator") f.annotator = value;
    else if (key == "lm") f.lm = value;
    else if (key == "embeddings") f.embeddings = value;
  }
  return f;
}

void Compare(const std::string& what, const std::string& stored, const std::string& current,
             bool strict, std::vector<std::string>* warnings) {
  if (stored.empty() || current.empty() || stored == current) return;
  const std::string msg = what + " fingerprint mismatch: checkpoint has " + stored +
                          ", current is " + current;
  if (strict) throw InvalidInput(msg);
  warnings->push_back(msg);
}

}  // namespace

std::string SerializeCheckpoint(const PhraseBreakModel& model,
                                const std::string& annotator_fingerprint) {
  const bool store_lm = model.lm() != nullptr && model.lm()->finetune();
  TensorFile params;
  params.metadata["format"] = std::string(kFormat);
  for (const nn::Parameter* p : model.params().All()) {
    if (IsLmParam(p->name) && !store_lm) continue;
    params.tensors[p->name] = Tensor::FromMatrix(p->value);
  }
  CheckpointFingerprints fp;
  fp.annotator = annotator_fingerprint;
  if (model.lm() != nullptr) fp.lm = model.lm()->fingerprint();
  fp.embeddings = model.embeddings_fingerprint();

  std::vector<ArchiveEntry> entries = {
      {"format.txt", std::string(kFormat) + "\n"},
      {"config.txt", model.config().Serialize()},
      {"params.safetensors", SerializeSafetensors(params)},
      {"token_vocab.txt", model.vocabulary().Serialize()},
      {"fingerprints.txt", FormatFingerprints(fp)},
  };
  if (store_lm) {
    std::string vocab;
    for (const std::string& piece : model.lm()->tokenizer().vocab()) vocab += piece + "\n";
    entries.push_back({"lm/config.json", model.lm()->config().ToJson()});
    entries.push_back({"lm/vocab.txt", vocab});
  }
  return WriteTar(entries);
}

void SaveCheckpoint(const PhraseBreakModel& model, const std::filesystem::path& path,
                    const std::string& annotator_fingerprint) {
  WriteFileAtomic(path, SerializeCheckpoint(model, annotator_fingerprint));
}

LoadedCheckpoint ParseCheckpoint(std::string_view bytes, const CheckpointLoadOptions& options,
                                 std::string_view source) {
  const std::string where(source);
  std::map<std::string, std::string> files;
  for (ArchiveEntry& e : ReadTar(bytes, source)) files[e.name] = std::move(e.data);
  auto member = [&](const std::string& name) -> const std::string& {
    auto it = files.find(name);
    if (it == files.end()) throw ParseError(where + ": checkpoint lacks " + name);
    return it->second;
  };
  if (Trim(member("format.txt")) != kFormat) {
    throw ParseError(where + ": unsupported checkpoint format '" +
                     std::string(Trim(member("format.txt"))) + "'");
  }

  LoadedCheckpoint out;
  SystemConfig config = SystemConfig::Parse(member("config.txt"));
  if (!options.lm_dir.empty() && config.lm) config.lm->checkpoint_id = options.lm_dir;
  if (!options.embeddings_path.empty()) config.embeddings_path = options.embeddings_path;
  out.fingerprints = ParseFingerprints(member("fingerprints.txt"));
  const TokenVocabulary vocab = TokenVocabulary::Parse(member("token_vocab.txt"));
  const TensorFile params = ParseSafetensors(member("params.safetensors"), where + ":params");

  const bool lm_stored = config.lm && files.count("lm/config.json") > 0;
  if (lm_stored) {
    PhraseBreakModel::LmArchitecture arch;
    arch.config = BertConfig::FromJson(member("lm/config.json"), where + ":lm/config.json");
    std::vector<std::string> pieces;
    for (const std::string& line : Split(member("lm/vocab.txt"), '\n')) pieces.push_back(line);
    while (!pieces.empty() && pieces.back().empty()) pieces.pop_back();
    arch.tokenizer = WordPieceTokenizer(std::move(pieces));
    arch.fingerprint = out.fingerprints.lm;
    out.model = PhraseBreakModel::Create(config, vocab, 0, &arch);
  } else {
    out.model = PhraseBreakModel::Create(config, vocab, 0);
    if (out.model->lm() != nullptr) {
      Compare("LM", out.fingerprints.lm, out.model->lm()->fingerprint(), options.strict,
              &out.warnings);
    }
  }
  Compare("word-vector table", out.fingerprints.embeddings,
          out.model->embeddings_fingerprint(), options.strict, &out.warnings);
  Compare("annotator", out.fingerprints.annotator, options.annotator_fingerprint, options.strict,
          &out.warnings);

  std::set<std::string> used;
  for (nn::Parameter* p : out.model->params().All()) {
    auto it = params.tensors.find(p->name);
    if (it == params.tensors.end()) {
      if (IsLmParam(p->name) && !lm_stored) continue;
      throw ParseError(where + ": checkpoint lacks parameter " + p->name);
    }
    Matrix m = it->second.ToMatrix();
    if (!m.SameShape(p->value)) {
      throw ShapeError(where + ": parameter " + p->name + " is " + m.ShapeString() +
                       ", model expects " + p->value.ShapeString());
    }
    p->value = std::move(m);
    used.insert(p->name);
  }
  for (const auto& [name, tensor] : params.tensors) {
    if (!used.count(name)) throw ParseError(where + ": unexpected parameter " + name);
  }
  return out;
}

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path,
                                const CheckpointLoadOptions& options) {
  return ParseCheckpoint(ReadFile(path), options, path.string());
}

}  // namespace pbp
