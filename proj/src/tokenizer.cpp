#include "albt/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "albt/error.h"
#include "albt/utf8.h"

namespace albt {

namespace {

bool is_stripped_mark(char32_t cp) { return (cp >= 0x064B && cp <= 0x0652) || cp == 0x0640; }

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' ||
         cp == U'\f' || cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F ||
         cp == 0x3000;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    const auto len = utf8::sequence_length(text, i);
    const auto cp = utf8::decode_at(text, i, len);
    if (is_space(cp)) {
      pending_space = !out.empty();
    } else if (!is_stripped_mark(cp)) {
      if (pending_space) out += ' ';
      pending_space = false;
      out.append(text.substr(i, len));
    }
    i += len;
  }
  return out;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  return cp == 0x00A1 || cp == 0x00AB || cp == 0x00BB || cp == 0x00BF || cp == 0x060C ||
         cp == 0x061B || cp == 0x061F || (cp >= 0x066A && cp <= 0x066D) || cp == 0x06D4 ||
         (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || cp == 0xFD3E || cp == 0xFD3F;
}

std::vector<std::string> pretokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto len = utf8::sequence_length(text, i);
    const auto cp = utf8::decode_at(text, i, len);
    if (is_space(cp)) {
      flush();
    } else if (is_punctuation(cp)) {
      flush();
      words.emplace_back(text.substr(i, len));
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return words;
}

// ---------------------------------------------------------------------------
// AffixLexicon

namespace {

std::vector<std::string> clean_affixes(std::vector<std::string> affixes, const char* kind) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& a : affixes) {
    if (a.empty()) throw ConfigError(fmt::format("empty {} in affix lexicon", kind));
    for (std::size_t i = 0; i < a.size();) {
      const auto len = utf8::sequence_length(a, i);
      const auto cp = utf8::decode_at(a, i, len);
      if (is_space(cp) || is_punctuation(cp)) {
        throw ConfigError(fmt::format("{} '{}' contains whitespace or punctuation", kind, a));
      }
      i += len;
    }
    if (seen.insert(a).second) out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

AffixLexicon::AffixLexicon(std::vector<std::string> prefixes, std::vector<std::string> suffixes)
    : prefixes_(clean_affixes(std::move(prefixes), "prefix")),
      suffixes_(clean_affixes(std::move(suffixes), "suffix")) {}

AffixLexicon AffixLexicon::parse(std::string_view text) {
  std::vector<std::string> prefixes;
  std::vector<std::string> suffixes;
  std::vector<std::string>* section = nullptr;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t") - first + 1);
    if (line.front() == '#') continue;
    if (line == "[prefixes]") {
      section = &prefixes;
    } else if (line == "[suffixes]") {
      section = &suffixes;
    } else if (section == nullptr) {
      throw ParseError(line_no, "affix outside a [prefixes]/[suffixes] section");
    } else {
      section->emplace_back(line);
    }
  }
  return AffixLexicon(std::move(prefixes), std::move(suffixes));
}

AffixLexicon AffixLexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

AffixLexicon AffixLexicon::builtin() {
  // Same content as data/affix_lexicon.txt.
  return AffixLexicon(
      {"وال", "بال", "فال", "كال", "لل", "ال", "و", "ف", "ب", "ك", "ل", "س"},
      {"هما", "كما", "هم", "هن", "كم", "كن", "ها", "نا", "ات", "ون", "ين", "ان", "ه", "ك", "ي",
       "ة"});
}

std::string AffixLexicon::serialize() const {
  std::string out = "[prefixes]\n";
  for (const auto& p : prefixes_) out += p + "\n";
  out += "[suffixes]\n";
  for (const auto& s : suffixes_) out += s + "\n";
  return out;
}

std::vector<std::string> segment_affixes(std::string_view word, const AffixLexicon& lexicon) {
  std::string_view prefix;
  for (const auto& p : lexicon.prefixes()) {
    if (p.size() > prefix.size() && word.starts_with(p)) prefix = p;
  }
  const auto rest = word.substr(prefix.size());
  std::string_view suffix;
  for (const auto& s : lexicon.suffixes()) {
    if (s.size() > suffix.size() && rest.ends_with(s)) suffix = s;
  }
  if (prefix.size() + suffix.size() >= word.size()) return {std::string(word)};
  std::vector<std::string> morphs;
  if (!prefix.empty()) morphs.push_back(std::string(prefix) + kAffixMarker);
  morphs.emplace_back(rest.substr(0, rest.size() - suffix.size()));
  if (!suffix.empty()) morphs.push_back(kAffixMarker + std::string(suffix));
  return morphs;
}

bool is_prefix_piece(std::string_view piece) {
  return piece.size() > 1 && piece.back() == kAffixMarker;
}

bool is_suffix_piece(std::string_view piece) {
  return piece.size() > 1 && piece.front() == kAffixMarker;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.empty()) tokens.assign(kSpecialTokens.begin(), kSpecialTokens.end());
  if (tokens.size() < kSpecialTokens.size() ||
      !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(), tokens.begin())) {
    throw FormatError("vocabulary must start with [PAD] [UNK] [CLS] [SEP] [MASK]");
  }
  for (auto& t : tokens) {
    if (t.empty() || t.find('\n') != std::string::npos) {
      throw FormatError("vocabulary tokens must be non-empty single-line strings");
    }
    if (index_.contains(t)) throw FormatError("duplicate vocabulary token '" + t + "'");
    add(std::move(t));
  }
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> tokens;
  for (auto line : split_lines(text)) tokens.emplace_back(line);
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || id >= size()) {
    throw IndexOutOfRange(fmt::format("token id {} outside [0, {})", id, size()));
  }
  return tokens_[id];
}

std::int32_t Vocabulary::add(std::string token) {
  if (auto id = find(token)) return *id;
  const auto id = size();
  max_token_bytes_ = std::max(max_token_bytes_, token.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::int32_t> wordpiece(std::string_view morph, const Vocabulary& vocab) {
  if (is_prefix_piece(morph) || is_suffix_piece(morph)) {
    return {vocab.find(morph).value_or(kUnkId)};
  }
  const auto chars = utf8::characters(morph);
  std::vector<std::int32_t> pieces;
  std::size_t begin = 0;
  std::string candidate;
  while (begin < chars.size()) {
    std::optional<std::int32_t> match;
    std::size_t end = chars.size();
    for (; end > begin; --end) {
      const auto from = static_cast<std::size_t>(chars[begin].data() - morph.data());
      const auto to = static_cast<std::size_t>(chars[end - 1].data() - morph.data()) +
                      chars[end - 1].size();
      candidate.clear();
      if (begin > 0) candidate += kContinuationMarker;
      candidate += morph.substr(from, to - from);
      if (candidate.size() > vocab.max_token_bytes()) continue;
      if ((match = vocab.find(candidate))) break;
    }
    if (!match) return {kUnkId};
    pieces.push_back(*match);
    begin = end;
  }
  return pieces;
}

std::vector<std::int32_t> encode_word(std::string_view word, const Vocabulary& vocab,
                                      const AffixLexicon& lexicon) {
  std::vector<std::int32_t> ids;
  for (const auto& morph : segment_affixes(word, lexicon)) {
    const auto pieces = wordpiece(morph, vocab);
    ids.insert(ids.end(), pieces.begin(), pieces.end());
  }
  return ids;
}

TokenizedSequence encode(std::string_view text, const Vocabulary& vocab,
                         const AffixLexicon& lexicon) {
  TokenizedSequence seq;
  for (const auto& word : pretokenize(normalize(text))) {
    const auto ids = encode_word(word, vocab, lexicon);
    const auto start = static_cast<std::int32_t>(seq.ids.size());
    seq.ids.insert(seq.ids.end(), ids.begin(), ids.end());
    seq.word_boundaries.push_back({start, static_cast<std::int32_t>(seq.ids.size()) - 1});
  }
  return seq;
}

std::string decode(std::span<const std::int32_t> ids, const Vocabulary& vocab) {
  std::string out;
  bool glue_next = false;
  for (auto id : ids) {
    const auto& piece = vocab.token(id);
    if (id < kNumSpecialTokens && id != kUnkId) continue;
    if (piece.starts_with(kContinuationMarker) && piece.size() > kContinuationMarker.size()) {
      out += std::string_view(piece).substr(kContinuationMarker.size());
      continue;
    }
    if (is_suffix_piece(piece)) {
      out += std::string_view(piece).substr(1);
      glue_next = false;
      continue;
    }
    if (!out.empty() && !glue_next) out += ' ';
    if (is_prefix_piece(piece)) {
      out += std::string_view(piece).substr(0, piece.size() - 1);
      glue_next = true;
    } else {
      out += piece;
      glue_next = false;
    }
  }
  return out;
}

}  // namespace albt
