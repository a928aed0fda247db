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

#include "pbp/corpus.h"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

constexpr std::string_view kIdPrefix = "# id=";

struct RawLine {
  std::size_t line_no;
  std::vector<std::string> fields;
};

struct RawBlock {
  std::string id;
  std::size_t id_line;
  std::vector<RawLine> lines;
};

std::string At(std::string_view source, std::size_t line_no) {
  return std::string(source) + ":" + std::to_string(line_no);
}

// Splits text into "# id=" blocks. Other '#' lines are comments.
std::vector<RawBlock> ReadBlocks(std::string_view text, std::string_view source) {
  std::vector<RawBlock> blocks;
  std::unordered_set<std::string> ids;
  bool open = false;
  auto close = [&](std::size_t line_no) {
    if (open && blocks.back().lines.empty()) {
      throw ParseError(At(source, line_no) + ": utterance '" + blocks.back().id +
                       "' has no tokens");
    }
    open = false;
  };
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      close(line_no);
      continue;
    }
    if (StartsWith(line, kIdPrefix)) {
      close(line_no);
      std::string id(Trim(line.substr(kIdPrefix.size())));
      if (id.empty()) throw ParseError(At(source, line_no) + ": empty utterance id");
      if (!ids.insert(id).second) {
        throw ParseError(At(source, line_no) + ": duplicate utterance id '" + id + "'");
      }
      blocks.push_back({std::move(id), line_no, {}});
      open = true;
      continue;
    }
    if (line.front() == '#') continue;
    if (!open) {
      throw ParseError(At(source, line_no) +
                       ": token line outside an utterance block (missing '# id=' line)");
    }
    blocks.back().lines.push_back({line_no, Split(line, '\t')});
  }
  close(line_no + 1);
  return blocks;
}

std::string UtteranceRef(std::string_view source, const RawBlock& b,
                         std::size_t line_no) {
  return At(source, line_no) + ": utterance '" + b.id + "'";
}

int ParseHead(const std::string& field, std::string_view source,
              const RawBlock& b, std::size_t line_no) {
  auto head = ParseInt(field);
  if (!head) {
    throw ParseError(UtteranceRef(source, b, line_no) +
                     ": dependency head is not an integer: '" + field + "'");
  }
  return static_cast<int>(*head);
}

AnnotatedToken ParseAnnotation(const std::string& surface, const std::string& pos,
                               const std::string& head, const std::string& rel,
                               std::string_view source, const RawBlock& b,
                               std::size_t line_no) {
  if (surface.empty()) {
    throw ParseError(UtteranceRef(source, b, line_no) + ": empty surface");
  }
  auto p = ParsePos(pos);
  if (!p) {
    throw ParseError(UtteranceRef(source, b, line_no) + ": unknown POS tag '" +
                     pos + "'");
  }
  auto r = ParseDepRel(rel);
  if (!r) {
    throw ParseError(UtteranceRef(source, b, line_no) +
                     ": unknown dependency relation '" + rel + "'");
  }
  return MakeToken(surface, *p, ParseHead(head, source, b, line_no), *r);
}

void CheckHeads(std::span<const AnnotatedToken> tokens, std::string_view source,
                const RawBlock& b) {
  try {
    ValidateDependencies(tokens);
  } catch (const InvalidInput& e) {
    throw ParseError(UtteranceRef(source, b, b.id_line) + ": " + e.what());
  }
}

}  // namespace

void ValidateUtterance(const Utterance& u) {
  if (u.tokens.empty()) throw InvalidInput("utterance '" + u.id + "' has no tokens");
  if (u.labels) {
    if (u.labels->size() != u.tokens.size()) {
      throw InvalidInput("utterance '" + u.id + "' has " +
                         std::to_string(u.tokens.size()) + " tokens but " +
                         std::to_string(u.labels->size()) + " labels");
    }
    for (int l : *u.labels) {
      if (l != 0 && l != 1) {
        throw InvalidInput("utterance '" + u.id + "' has non-binary label " +
                           std::to_string(l));
      }
    }
  }
  try {
    ValidateDependencies(u.tokens);
  } catch (const InvalidInput& e) {
    throw InvalidInput("utterance '" + u.id + "': " + e.what());
  }
}

std::vector<int> LabelFromAlignment(std::span<const WordTiming> timings,
                                    std::int64_t threshold_ms) {
  if (timings.empty()) throw InvalidInput("no word timings");
  if (threshold_ms <= 0) throw InvalidInput("break threshold must be positive");
  for (std::size_t i = 0; i < timings.size(); ++i) {
    const WordTiming& w = timings[i];
    if (w.start_ms < 0 || w.end_ms < w.start_ms) {
      throw InvalidInput("word " + std::to_string(i) + " ('" + w.surface +
                         "') has invalid interval [" + std::to_string(w.start_ms) +
                         ", " + std::to_string(w.end_ms) + "]");
    }
    if (i > 0 && w.start_ms < timings[i - 1].end_ms) {
      throw InvalidInput("word " + std::to_string(i) + " ('" + w.surface +
                         "') starts at " + std::to_string(w.start_ms) +
                         " ms, before the previous word ends at " +
                         std::to_string(timings[i - 1].end_ms) +
                         " ms (overlapping or unsorted timings)");
    }
  }
  std::vector<int> labels(timings.size(), 0);
  for (std::size_t i = 0; i + 1 < timings.size(); ++i) {
    const std::int64_t gap = timings[i + 1].start_ms - timings[i].end_ms;
    labels[i] = gap > threshold_ms ? 1 : 0;
  }
  return labels;
}

std::vector<Utterance> ReadCorpus(const std::filesystem::path& path) {
  return ParseCorpus(ReadFile(path), path.string());
}

std::vector<Utterance> ParseCorpus(std::string_view text, std::string_view source) {
  std::vector<Utterance> out;
  for (const RawBlock& b : ReadBlocks(text, source)) {
    Utterance u;
    u.id = b.id;
    std::size_t labeled = 0;
    std::vector<int> labels;
    for (const RawLine& l : b.lines) {
      const auto& f = l.fields;
      if (f.size() != 4 && f.size() != 5) {
        throw ParseError(UtteranceRef(source, b, l.line_no) + ": expected 4 or 5 " +
                         "tab-separated columns, got " + std::to_string(f.size()));
      }
      u.tokens.push_back(ParseAnnotation(f[0], f[1], f[2], f[3], source, b, l.line_no));
      if (f.size() == 5) {
        ++labeled;
        if (f[4] != "0" && f[4] != "1") {
          throw ParseError(UtteranceRef(source, b, l.line_no) +
                           ": non-binary label '" + f[4] + "'");
        }
        labels.push_back(f[4] == "1" ? 1 : 0);
      }
    }
    if (labeled != 0 && labeled != u.tokens.size()) {
      throw ParseError(UtteranceRef(source, b, b.id_line) + ": " +
                       std::to_string(u.tokens.size()) + " tokens but " +
                       std::to_string(labeled) + " labels");
    }
    if (labeled != 0) u.labels = std::move(labels);
    CheckHeads(u.tokens, source, b);
    out.push_back(std::move(u));
  }
  return out;
}

std::string FormatCorpus(std::span<const Utterance> utterances) {
  std::string out;
  for (const Utterance& u : utterances) {
    ValidateUtterance(u);
    out += kIdPrefix;
    out += u.id;
    out += '\n';
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      const AnnotatedToken& t = u.tokens[i];
      out += t.surface;
      out += '\t';
      out += PosName(t.pos);
      out += '\t';
      out += std::to_string(t.dep_head);
      out += '\t';
      out += DepRelName(t.dep_rel);
      if (u.labels) {
        out += '\t';
        out += (*u.labels)[i] ? '1' : '0';
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void WriteCorpus(std::span<const Utterance> utterances,
                 const std::filesystem::path& path) {
  WriteFileAtomic(path, FormatCorpus(utterances));
}

CorpusSplit SplitCorpus(std::span<const Utterance> utterances, SplitSizes sizes,
                        std::uint64_t seed) {
  if (sizes.total() != utterances.size()) {
    throw InvalidInput("split sizes " + std::to_string(sizes.train) + "+" +
                       std::to_string(sizes.validation) + "+" +
                       std::to_string(sizes.test) + " do not sum to " +
                       std::to_string(utterances.size()) + " utterances");
  }
  std::vector<std::size_t> order(utterances.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);
  // part[i]: 0 train, 1 validation, 2 test
  std::vector<int> part(utterances.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    part[order[k]] = k < sizes.train ? 0 : (k < sizes.train + sizes.validation ? 1 : 2);
  }
  CorpusSplit split;
  split.train.reserve(sizes.train);
  split.validation.reserve(sizes.validation);
  split.test.reserve(sizes.test);
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    auto& dst = part[i] == 0 ? split.train
                             : (part[i] == 1 ? split.validation : split.test);
    dst.push_back(utterances[i]);
  }
  return split;
}

std::vector<AlignedUtterance> ReadAlignment(const std::filesystem::path& path) {
  return ParseAlignment(ReadFile(path), path.string());
}

std::vector<AlignedUtterance> ParseAlignment(std::string_view text,
                                             std::string_view source) {
  std::vector<AlignedUtterance> out;
  for (const RawBlock& b : ReadBlocks(text, source)) {
    AlignedUtterance a;
    a.id = b.id;
    std::vector<AnnotatedToken> annotations;
    for (const RawLine& l : b.lines) {
      const auto& f = l.fields;
      if (f.size() != 3 && f.size() != 6) {
        throw ParseError(UtteranceRef(source, b, l.line_no) +
                         ": expected 3 or 6 tab-separated columns, got " +
                         std::to_string(f.size()));
      }
      auto start = ParseInt(f[1]);
      auto end = ParseInt(f[2]);
      if (!start || !end) {
        throw ParseError(UtteranceRef(source, b, l.line_no) +
                         ": timings must be integer milliseconds");
      }
      a.timings.push_back({f[0], *start, *end});
      if (f.size() == 6) {
        annotations.push_back(
            ParseAnnotation(f[0], f[3], f[4], f[5], source, b, l.line_no));
      }
    }
    if (!annotations.empty()) {
      if (annotations.size() != a.timings.size()) {
        throw ParseError(UtteranceRef(source, b, b.id_line) +
                         ": annotation columns present on only some tokens");
      }
      CheckHeads(annotations, source, b);
      a.annotations = std::move(annotations);
    }
    out.push_back(std::move(a));
  }
  return out;
}

bool LooksLikeAlignment(std::string_view text) {
  for (const std::string& raw : Split(text, '\n')) {
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = Split(line, '\t');
    return f.size() >= 3 && ParseInt(f[1]).has_value() && ParseInt(f[2]).has_value();
  }
  return false;
}

}  // namespace pbp
