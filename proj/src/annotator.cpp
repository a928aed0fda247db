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

#include "pbp/annotator.h"

#include <array>
#include <cstdio>
#include <sstream>

#include <sys/wait.h>

#include "pbp/error.h"
#include "pbp/util.h"

namespace pbp {

namespace {

enum class CharClass { kSpace, kHiragana, kKatakana, kKanji, kLatin, kDigit, kPunct, kSymbol };

bool IsPunctChar(char32_t c) {
  switch (c) {
    case U'、': case U'。': case U'，': case U'．': case U'！': case U'？':
    case U'・': case U'「': case U'」': case U'『': case U'』': case U'（':
    case U'）': case U'［': case U'］': case U'【': case U'】': case U'〈':
    case U'〉': case U'《': case U'》': case U'…': case U'‥': case U'：':
    case U'；': case U'〜': case U'―': case U'“': case U'”': case U'‘':
    case U'’': case U'〔': case U'〕': case U'｛': case U'｝':
    case U',': case U'.': case U'!': case U'?': case U';': case U':':
    case U'(': case U')': case U'[': case U']': case U'{': case U'}':
    case U'"': case U'\'': case U'-':
      return true;
    default:
      return false;
  }
}

CharClass Classify(char32_t c) {
  if (c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'　') {
    return CharClass::kSpace;
  }
  if (IsPunctChar(c)) return CharClass::kPunct;
  if (c >= 0x3041 && c <= 0x309F) return CharClass::kHiragana;
  if ((c >= 0x30A0 && c <= 0x30FF) || (c >= 0x31F0 && c <= 0x31FF) ||
      (c >= 0xFF66 && c <= 0xFF9F)) {
    return CharClass::kKatakana;
  }
  if ((c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
      c == 0x3005 || c == 0x3006 || (c >= 0xF900 && c <= 0xFAFF)) {
    return CharClass::kKanji;
  }
  if ((c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19)) {
    return CharClass::kDigit;
  }
  if ((c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z') ||
      (c >= 0xFF21 && c <= 0xFF3A) || (c >= 0xFF41 && c <= 0xFF5A) ||
      (c >= 0x00C0 && c <= 0x024F)) {
    return CharClass::kLatin;
  }
  return CharClass::kSymbol;
}

Pos PosForClass(CharClass c) {
  switch (c) {
    case CharClass::kDigit: return Pos::kNum;
    case CharClass::kPunct: return Pos::kPunct;
    case CharClass::kSymbol: return Pos::kSym;
    case CharClass::kHiragana: return Pos::kX;
    default: return Pos::kNoun;
  }
}

bool IsFunctionTag(Pos p) {
  switch (p) {
    case Pos::kAdp: case Pos::kAux: case Pos::kPart: case Pos::kPunct:
    case Pos::kCconj: case Pos::kSconj:
      return true;
    default:
      return false;
  }
}

bool IsNominal(Pos p) {
  return p == Pos::kNoun || p == Pos::kPropn || p == Pos::kPron || p == Pos::kNum;
}

DepRel FunctionRel(Pos p) {
  switch (p) {
    case Pos::kAdp: return DepRel::kCase;
    case Pos::kAux: return DepRel::kAux;
    case Pos::kPunct: return DepRel::kPunct;
    case Pos::kCconj: return DepRel::kCc;
    default: return DepRel::kMark;
  }
}

// `marker` is the particle right after the dependent, if any.
DepRel ContentRel(Pos dep, Pos head, const AnnotatedToken* marker) {
  if (IsNominal(dep)) {
    if (marker == nullptr || marker->pos != Pos::kAdp) {
      return IsNominal(head) ? DepRel::kCompound : DepRel::kObl;
    }
    const std::string& m = marker->surface;
    if (m == "の") return DepRel::kNmod;
    if (m == "は" || m == "が") return DepRel::kNsubj;
    if (m == "を") return DepRel::kObj;
    return DepRel::kObl;
  }
  switch (dep) {
    case Pos::kVerb: case Pos::kAdj:
      return IsNominal(head) ? DepRel::kAcl : DepRel::kAdvcl;
    case Pos::kAdv: return DepRel::kAdvmod;
    case Pos::kDet: return DepRel::kDet;
    case Pos::kIntj: return DepRel::kDiscourse;
    default: return DepRel::kDep;
  }
}

struct Entry {
  const char* surface;
  Pos pos;
};

// Function words are the heart of the segmenter; the content words cover
// everyday vocabulary and the synthetic corpus generator.
constexpr Entry kBuiltinLexicon[] = {
    // case and binding particles
    {"は", Pos::kAdp}, {"が", Pos::kAdp}, {"を", Pos::kAdp}, {"に", Pos::kAdp},
    {"で", Pos::kAdp}, {"と", Pos::kAdp}, {"へ", Pos::kAdp}, {"も", Pos::kAdp},
    {"の", Pos::kAdp}, {"まで", Pos::kAdp}, {"より", Pos::kAdp}, {"や", Pos::kAdp},
    {"には", Pos::kAdp}, {"では", Pos::kAdp},
    // sentence-final and other particles
    {"か", Pos::kPart}, {"ね", Pos::kPart}, {"よ", Pos::kPart}, {"な", Pos::kPart},
    {"ば", Pos::kSconj}, {"ので", Pos::kSconj}, {"けど", Pos::kSconj},
    {"けれど", Pos::kSconj}, {"から", Pos::kSconj}, {"のに", Pos::kSconj},
    {"て", Pos::kSconj}, {"ながら", Pos::kSconj},
    // auxiliaries
    {"です", Pos::kAux}, {"でした", Pos::kAux}, {"ます", Pos::kAux},
    {"ました", Pos::kAux}, {"ません", Pos::kAux}, {"だ", Pos::kAux},
    {"だった", Pos::kAux}, {"た", Pos::kAux}, {"ない", Pos::kAux},
    {"たい", Pos::kAux}, {"れる", Pos::kAux}, {"られる", Pos::kAux},
    {"でしょう", Pos::kAux}, {"ましょう", Pos::kAux},
    // conjunctions
    {"そして", Pos::kCconj}, {"しかし", Pos::kCconj}, {"また", Pos::kCconj},
    {"でも", Pos::kCconj}, {"だから", Pos::kCconj}, {"それから", Pos::kCconj},
    {"ところが", Pos::kCconj}, {"さらに", Pos::kCconj},
    // pronouns, determiners, adverbs, interjections
    {"私", Pos::kPron}, {"彼", Pos::kPron}, {"彼女", Pos::kPron},
    {"これ", Pos::kPron}, {"それ", Pos::kPron}, {"あれ", Pos::kPron},
    {"この", Pos::kDet}, {"その", Pos::kDet}, {"あの", Pos::kDet},
    {"とても", Pos::kAdv}, {"よく", Pos::kAdv}, {"まだ", Pos::kAdv},
    {"もう", Pos::kAdv}, {"少し", Pos::kAdv}, {"すぐ", Pos::kAdv},
    {"こんにちは", Pos::kIntj}, {"ありがとう", Pos::kIntj}, {"はい", Pos::kIntj},
    // nouns
    {"今日", Pos::kNoun}, {"明日", Pos::kNoun}, {"昨日", Pos::kNoun},
    {"天気", Pos::kNoun}, {"晴れ", Pos::kNoun}, {"曇り", Pos::kNoun},
    {"雨", Pos::kNoun}, {"雪", Pos::kNoun}, {"学校", Pos::kNoun},
    {"先生", Pos::kNoun}, {"学生", Pos::kNoun}, {"映画", Pos::kNoun},
    {"本", Pos::kNoun}, {"駅", Pos::kNoun}, {"友達", Pos::kNoun},
    {"時間", Pos::kNoun}, {"電車", Pos::kNoun}, {"会社", Pos::kNoun},
    {"公園", Pos::kNoun}, {"料理", Pos::kNoun}, {"音楽", Pos::kNoun},
    {"手紙", Pos::kNoun}, {"部屋", Pos::kNoun}, {"写真", Pos::kNoun},
    {"猫", Pos::kNoun}, {"犬", Pos::kNoun}, {"花", Pos::kNoun},
    {"海", Pos::kNoun}, {"山", Pos::kNoun}, {"町", Pos::kNoun},
    {"店", Pos::kNoun}, {"仕事", Pos::kNoun}, {"家族", Pos::kNoun},
    {"子供", Pos::kNoun}, {"朝", Pos::kNoun}, {"夜", Pos::kNoun},
    {"東京", Pos::kPropn}, {"大阪", Pos::kPropn}, {"京都", Pos::kPropn},
    // verbs and adjectives
    {"行く", Pos::kVerb}, {"行き", Pos::kVerb}, {"来る", Pos::kVerb},
    {"来", Pos::kVerb}, {"見る", Pos::kVerb}, {"見", Pos::kVerb},
    {"食べる", Pos::kVerb}, {"食べ", Pos::kVerb}, {"読む", Pos::kVerb},
    {"読み", Pos::kVerb}, {"書く", Pos::kVerb}, {"書き", Pos::kVerb},
    {"話す", Pos::kVerb}, {"話し", Pos::kVerb}, {"聞く", Pos::kVerb},
    {"聞き", Pos::kVerb}, {"買う", Pos::kVerb}, {"買い", Pos::kVerb},
    {"作る", Pos::kVerb}, {"作り", Pos::kVerb}, {"待つ", Pos::kVerb},
    {"帰る", Pos::kVerb}, {"会う", Pos::kVerb}, {"歩く", Pos::kVerb},
    {"遊ぶ", Pos::kVerb}, {"働く", Pos::kVerb}, {"休む", Pos::kVerb},
    {"する", Pos::kVerb}, {"し", Pos::kVerb}, {"ある", Pos::kVerb},
    {"いる", Pos::kVerb}, {"なる", Pos::kVerb},
    {"新しい", Pos::kAdj}, {"古い", Pos::kAdj}, {"大きい", Pos::kAdj},
    {"小さい", Pos::kAdj}, {"良い", Pos::kAdj}, {"楽しい", Pos::kAdj},
    {"暑い", Pos::kAdj}, {"寒い", Pos::kAdj},
};

std::unordered_map<std::string, Pos> BuiltinLexicon() {
  std::unordered_map<std::string, Pos> lex;
  for (const Entry& e : kBuiltinLexicon) lex.emplace(e.surface, e.pos);
  return lex;
}

}  // namespace

std::vector<AnnotatedToken> Annotate(std::string_view text,
                                     const Annotator& annotator,
                                     std::string_view sentence_id) {
  const std::string id = sentence_id.empty() ? "<unnamed>" : std::string(sentence_id);
  if (Trim(text).empty()) {
    throw AnnotationError("sentence " + id + ": empty text");
  }
  std::vector<AnnotatedToken> tokens;
  try {
    tokens = annotator.Annotate(text);
    if (tokens.empty()) throw AnnotationError("annotator produced no tokens");
    ValidateDependencies(tokens);
  } catch (const AnnotationError& e) {
    throw AnnotationError("sentence " + id + ": " + e.what());
  } catch (const Error& e) {
    throw AnnotationError("sentence " + id + ": " + e.what());
  }
  return tokens;
}

void AssignHeuristicDependencies(std::vector<AnnotatedToken>& tokens) {
  const int n = static_cast<int>(tokens.size());
  std::vector<int> content;
  for (int i = 0; i < n; ++i) {
    if (!IsFunctionTag(tokens[i].pos)) content.push_back(i);
  }
  if (content.empty()) {
    for (int i = 0; i < n; ++i) {
      tokens[i].dep_head = i == 0 ? -1 : 0;
      tokens[i].dep_rel = i == 0 ? DepRel::kRoot : FunctionRel(tokens[i].pos);
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    AnnotatedToken& t = tokens[i];
    auto next = std::upper_bound(content.begin(), content.end(), i);
    if (!IsFunctionTag(t.pos)) {
      if (next == content.end()) {
        t.dep_head = -1;
        t.dep_rel = DepRel::kRoot;
      } else {
        t.dep_head = *next;
        const AnnotatedToken* marker = i + 1 < n ? &tokens[i + 1] : nullptr;
        t.dep_rel = ContentRel(t.pos, tokens[*next].pos, marker);
      }
      continue;
    }
    auto prev = std::lower_bound(content.begin(), content.end(), i);
    t.dep_head = prev != content.begin() ? *(prev - 1) : *next;
    t.dep_rel = FunctionRel(t.pos);
  }
}

// ---------------------------------------------------------------------------

LexiconAnnotator::LexiconAnnotator(std::unordered_map<std::string, Pos> lexicon)
    : lexicon_(std::move(lexicon)) {
  std::vector<std::string> entries;
  for (const auto& [surface, pos] : lexicon_) {
    max_entry_chars_ = std::max(max_entry_chars_, DecodeUtf8(surface).size());
    entries.push_back(surface + "\t" + std::string(PosName(pos)));
  }
  std::sort(entries.begin(), entries.end());
  fingerprint_ = std::string(kName) + "/" + std::to_string(kVersion) + ":" +
                 HashHex(Join(entries, "\n"));
}

const LexiconAnnotator& LexiconAnnotator::Default() {
  static const LexiconAnnotator* instance = new LexiconAnnotator(BuiltinLexicon());
  return *instance;
}

LexiconAnnotator LexiconAnnotator::FromFile(const std::filesystem::path& path) {
  auto lex = BuiltinLexicon();
  std::size_t line_no = 0;
  for (const std::string& raw : Split(ReadFile(path), '\n')) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = Split(line, '\t');
    auto pos = f.size() == 2 ? ParsePos(f[1]) : std::nullopt;
    if (!pos || f[0].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'surface<TAB>POS'");
    }
    lex[f[0]] = *pos;
  }
  return LexiconAnnotator(std::move(lex));
}

Pos LexiconAnnotator::TagUnknown(std::string_view surface) const {
  auto cps = DecodeUtf8(surface);
  bool all_punct = !cps.empty();
  for (const auto& cp : cps) all_punct = all_punct && Classify(cp.value) == CharClass::kPunct;
  if (all_punct) return Pos::kPunct;
  return cps.empty() ? Pos::kX : PosForClass(Classify(cps.front().value));
}

std::vector<AnnotatedToken> LexiconAnnotator::Annotate(std::string_view text) const {
  std::vector<CodePoint> cps;
  try {
    cps = DecodeUtf8(text);
  } catch (const InvalidInput& e) {
    throw AnnotationError(e.what());
  }
  const std::size_t n = cps.size();
  auto bytes = [&](std::size_t i, std::size_t len) {
    const std::size_t b = cps[i].offset;
    const std::size_t e = cps[i + len - 1].offset + cps[i + len - 1].length;
    return std::string(text.substr(b, e - b));
  };
  // Longest lexicon entry starting at i, 0 if none.
  auto match = [&](std::size_t i) -> std::size_t {
    for (std::size_t len = std::min(max_entry_chars_, n - i); len >= 1; --len) {
      if (Classify(cps[i + len - 1].value) == CharClass::kSpace) continue;
      if (lexicon_.count(bytes(i, len)) != 0) return len;
    }
    return 0;
  };

  std::vector<AnnotatedToken> tokens;
  std::size_t i = 0;
  while (i < n) {
    const CharClass cls = Classify(cps[i].value);
    if (cls == CharClass::kSpace) {
      ++i;
      continue;
    }
    if (const std::size_t len = match(i); len > 0) {
      std::string s = bytes(i, len);
      const Pos pos = lexicon_.at(s);
      tokens.push_back(MakeToken(std::move(s), pos, -1, DepRel::kDep));
      i += len;
      continue;
    }
    std::size_t j = i + 1;
    if (cls != CharClass::kPunct && cls != CharClass::kSymbol) {
      while (j < n && Classify(cps[j].value) == cls) {
        const std::size_t m = match(j);
        if (m >= 2 || (m == 1 && cls == CharClass::kHiragana)) break;
        ++j;
      }
    }
    tokens.push_back(MakeToken(bytes(i, j - i), PosForClass(cls), -1, DepRel::kDep));
    i = j;
  }
  AssignHeuristicDependencies(tokens);
  return tokens;
}

std::vector<AnnotatedToken> LexiconAnnotator::AnnotateTokens(
    std::span<const std::string> surfaces) const {
  std::vector<AnnotatedToken> tokens;
  for (const std::string& s : surfaces) {
    auto it = lexicon_.find(s);
    const Pos pos = it != lexicon_.end() ? it->second : TagUnknown(s);
    tokens.push_back(MakeToken(s, pos, -1, DepRel::kDep));
  }
  AssignHeuristicDependencies(tokens);
  return tokens;
}

// ---------------------------------------------------------------------------

CommandAnnotator::CommandAnnotator(std::string command) : command_(std::move(command)) {}

std::string CommandAnnotator::Fingerprint() const {
  return "command:" + HashHex(command_);
}

std::vector<AnnotatedToken> CommandAnnotator::Annotate(std::string_view text) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto input = std::filesystem::temp_directory_path() /
               ("pbp_annotate_" + std::to_string(::getpid()) + ".txt");
  WriteFileAtomic(input, std::string(text) + "\n");
  const std::string cmd = "(" + command_ + ") < '" + input.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    std::filesystem::remove(input);
    throw AnnotationError("cannot start annotator command: " + command_);
  }
  std::string output;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), got);
  const int status = ::pclose(pipe);
  std::filesystem::remove(input);
  if (status != 0) {
    throw AnnotationError("annotator command exited with status " +
                          std::to_string(WEXITSTATUS(status)) + ": " + command_);
  }
  std::vector<AnnotatedToken> tokens;
  std::size_t line_no = 0;
  for (const std::string& raw : Split(output, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto f = Split(line, '\t');
    if (f.size() < 4) {
      throw AnnotationError("annotator output line " + std::to_string(line_no) +
                            ": expected surface, POS, head, relation");
    }
    auto pos = ParsePos(f[1]);
    auto head = ParseInt(f[2]);
    auto rel = ParseDepRel(f[3]);
    if (!pos || !head || !rel || f[0].empty()) {
      throw AnnotationError("annotator output line " + std::to_string(line_no) +
                            ": malformed '" + std::string(line) + "'");
    }
    tokens.push_back(MakeToken(f[0], *pos, static_cast<int>(*head), *rel));
  }
  return tokens;
}

std::vector<AnnotatedToken> CommandAnnotator::AnnotateTokens(
    std::span<const std::string> surfaces) const {
  auto tokens = Annotate(Join(surfaces, " "));
  bool same = tokens.size() == surfaces.size();
  for (std::size_t i = 0; same && i < tokens.size(); ++i) {
    same = tokens[i].surface == surfaces[i];
  }
  if (!same) {
    throw AnnotationError("external annotator changed the tokenization of '" +
                          Join(surfaces, " ") + "'");
  }
  return tokens;
}

}  // namespace pbp
