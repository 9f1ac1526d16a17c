#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace albt {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kMaskId = 4;
inline constexpr std::int32_t kNumSpecialTokens = 5;

inline constexpr std::array<std::string_view, kNumSpecialTokens> kSpecialTokens = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

inline constexpr std::string_view kContinuationMarker = "##";
inline constexpr char kAffixMarker = '+';

// Strips Arabic diacritics (U+064B..U+0652) and tatweel (U+0640), collapses
// whitespace runs to one space and trims. Malformed UTF-8 passes through.
std::string normalize(std::string_view text);

bool is_punctuation(char32_t cp);

// Whitespace split; every punctuation character becomes its own word.
std::vector<std::string> pretokenize(std::string_view text);

// Closed lists of prefixes and suffixes used for prefix/stem/suffix
// segmentation. Entries are non-empty, whitespace- and punctuation-free, and
// deduplicated (first occurrence kept).
class AffixLexicon {
 public:
  AffixLexicon() = default;
  AffixLexicon(std::vector<std::string> prefixes, std::vector<std::string> suffixes);

  // Text format: "[prefixes]" and "[suffixes]" section headers followed by one
  // affix per line. Blank lines and lines starting with '#' are ignored.
  static AffixLexicon parse(std::string_view text);
  static AffixLexicon load(const std::filesystem::path& path);
  static AffixLexicon builtin();
  std::string serialize() const;

  const std::vector<std::string>& prefixes() const { return prefixes_; }
  const std::vector<std::string>& suffixes() const { return suffixes_; }

 private:
  std::vector<std::string> prefixes_;
  std::vector<std::string> suffixes_;
};

// Splits `word` into at most one prefix, a stem and at most one suffix using
// longest matches (prefix first). Prefixes are emitted as "p+", suffixes as
// "+s". When the stem would be empty the word is returned whole.
std::vector<std::string> segment_affixes(std::string_view word, const AffixLexicon& lexicon);

bool is_prefix_piece(std::string_view piece);
bool is_suffix_piece(std::string_view piece);

// Bijection between subword strings and dense ids. Ids 0..4 are always
// [PAD] [UNK] [CLS] [SEP] [MASK].
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  // One token per line, line number = id.
  static Vocabulary parse(std::string_view text);
  static Vocabulary load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
  std::optional<std::int32_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  // Throws IndexOutOfRange for ids outside [0, size()).
  const std::string& token(std::int32_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Returns the existing id when the token is already present.
  std::int32_t add(std::string token);
  std::size_t max_token_bytes() const { return max_token_bytes_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t max_token_bytes_ = 0;
};

// Inclusive token-index range covering one pre-tokenized word.
struct WordSpan {
  std::int32_t start = 0;
  std::int32_t end = 0;
  std::int32_t size() const { return end - start + 1; }
  bool operator==(const WordSpan&) const = default;
};

struct TokenizedSequence {
  std::vector<std::int32_t> ids;
  std::vector<WordSpan> word_boundaries;
};

struct VocabTrainingResult {
  Vocabulary vocab;
  std::vector<std::pair<std::string, std::string>> merges;
};

// Pair-merge vocabulary construction over normalized, pre-tokenized,
// affix-segmented text. The base alphabet (every character in bare form,
// "##"-forms of characters seen in non-initial position, and affix pieces)
// is always included; merges of the most frequent adjacent pair (ties broken
// lexicographically) are added until `target_size` entries exist or no pair
// occurs at least twice. Throws EmptyCorpus for a corpus without words and
// ConfigError when `target_size` cannot hold the specials and the alphabet.
VocabTrainingResult train_wordpiece(std::span<const std::string> corpus, std::size_t target_size,
                                    const AffixLexicon& lexicon);

// Greedy longest-match-first pieces for one morph; a morph that cannot be
// fully covered becomes a single [UNK].
std::vector<std::int32_t> wordpiece(std::string_view morph, const Vocabulary& vocab);

// Token ids for one pre-tokenized word (all of its morphs).
std::vector<std::int32_t> encode_word(std::string_view word, const Vocabulary& vocab,
                                      const AffixLexicon& lexicon);

TokenizedSequence encode(std::string_view text, const Vocabulary& vocab,
                         const AffixLexicon& lexicon);

// Inverse of encode on in-vocabulary text: specials other than [UNK] are
// dropped, "##" pieces and affix pieces are glued to their neighbours.
std::string decode(std::span<const std::int32_t> ids, const Vocabulary& vocab);

}  // namespace albt
