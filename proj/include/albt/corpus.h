#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "albt/tensor.h"
#include "albt/tokenizer.h"

namespace albt {

// ---------------------------------------------------------------------------
// Sentences

// Normalizes every sentence and keeps the first occurrence of each, in order.
// Sentences that normalize to the empty string are dropped.
std::vector<std::string> dedup(std::span<const std::string> sentences);

inline constexpr std::size_t kDefaultMaxSentenceWords = 65;

// Splits on terminal punctuation (. ? ! ؟ ؛) and newlines. A fragment longer
// than `max_words` words is cut after the last comma-terminated word within
// the limit, or hard-cut at the limit when there is none.
std::vector<std::string> sentence_split(std::string_view document,
                                        std::size_t max_words = kDefaultMaxSentenceWords);

// Greedily packs consecutive encoded sentences into examples of at most
// max_len - 2 content tokens (room for [CLS]/[SEP]). Sentences are never
// split across examples; one that is too long on its own is truncated at a
// word boundary.
std::vector<TokenizedSequence> build_pretrain_examples(std::span<const std::string> sentences,
                                                       const Vocabulary& vocab,
                                                       const AffixLexicon& lexicon,
                                                       std::size_t max_len);

// ---------------------------------------------------------------------------
// Masked-language-model corruption

enum class MaskAction { kMask, kRandom, kKeep };

struct MaskingOptions {
  double rate = 0.15;
  double mask_probability = 0.8;
  double random_probability = 0.1;
  // false selects individual tokens instead of whole words.
  bool whole_word = true;
};

struct MaskSelection {
  WordSpan span;
  MaskAction action;
};

struct MaskedSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> labels;  // original id at selected positions, else kNoLabel
  std::vector<MaskSelection> selections;
};

// Selects whole words in random order until at least ceil(rate * n) of the n
// content tokens are covered (at least one word), then applies one action per
// selected word to all of its tokens. Deterministic in (seed, example_index).
MaskedSequence whole_word_mask(const TokenizedSequence& seq, std::int32_t vocab_size,
                               const MaskingOptions& options, std::uint64_t seed,
                               std::uint64_t example_index);

// ---------------------------------------------------------------------------
// Long documents

inline constexpr std::size_t kDefaultHead = 128;
inline constexpr std::size_t kDefaultTail = 382;
inline constexpr std::size_t kMaxSequenceLength = 512;

// Keeps the first `head` and last `tail` ids when the input is longer than
// head + tail. Throws ConfigError when head + tail + 2 exceeds max_len.
std::vector<std::int32_t> head_tails_truncate(std::span<const std::int32_t> content_ids,
                                              std::size_t head = kDefaultHead,
                                              std::size_t tail = kDefaultTail,
                                              std::size_t max_len = kMaxSequenceLength);

// ---------------------------------------------------------------------------
// Task datasets

struct ClassifiedDocument {
  std::string text;
  std::int32_t label = 0;
};

struct ClassificationDataset {
  std::vector<std::string> labels;  // first-seen order
  std::vector<ClassifiedDocument> documents;
};

struct ClassificationLoadOptions {
  // When set, labels must come from this list (ids follow its order).
  std::optional<std::vector<std::string>> fixed_labels;
  // Drops the first n lines of each document; "\n" escapes in the text field
  // mark line breaks.
  std::size_t strip_head_lines = 0;
};

// `label<TAB>text` per line; only the first tab separates. Blank lines are
// skipped. Throws ParseError with the 1-based line number.
ClassificationDataset parse_classification(std::string_view text,
                                           const ClassificationLoadOptions& options = {});
ClassificationDataset load_classification_file(const std::filesystem::path& path,
                                               const ClassificationLoadOptions& options = {});
std::string format_classification(const ClassificationDataset& dataset);

struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;
};

enum class TagScheme { kIob, kBinary, kOther };

struct TaggingDataset {
  std::vector<std::string> tag_set;  // first-seen order
  std::vector<TaggedSentence> sentences;
  TagScheme scheme = TagScheme::kOther;
};

TagScheme detect_scheme(std::span<const std::string> tags);

// Throws ValidationError(sentence, position) at the first I-X that does not
// follow B-X or I-X. Indices are 0-based.
void validate_iob(std::span<const TaggedSentence> sentences);

// `token<SPACE>tag` per line, blank line between sentences. IOB data is
// validated.
TaggingDataset parse_tagging(std::string_view text);
TaggingDataset load_tagging_file(const std::filesystem::path& path);
std::string format_tagging(std::span<const TaggedSentence> sentences);

// ---------------------------------------------------------------------------
// Model inputs

// One encoder row: [CLS] content [SEP]. Token labels align with `ids`.
struct Example {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> token_labels;
  std::int32_t sequence_label = kNoLabel;
};

// Padded rectangular batch. For masked-language-model batches `token_labels`
// holds the MLM targets. Segment ids are all zero.
struct Batch {
  IdMatrix input_ids;
  IdMatrix attention_mask;  // 1 = real token
  IdMatrix segment_ids;
  IdMatrix token_labels;
  std::vector<std::int32_t> sequence_labels;

  std::int64_t rows() const { return input_ids.rows(); }
  std::int64_t cols() const { return input_ids.cols(); }
};
using MaskedBatch = Batch;

// Optional seeded shuffle, then consecutive groups of `batch_size`, each padded
// to its longest row. The last short batch is kept.
std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Wraps each packed sequence in [CLS]/[SEP] and applies masking with the
// example's index in `sequences`.
std::vector<Example> make_mlm_examples(std::span<const TokenizedSequence> sequences,
                                       std::int32_t vocab_size, const MaskingOptions& options,
                                       std::uint64_t seed);

std::vector<Example> make_classification_examples(std::span<const ClassifiedDocument> documents,
                                                  const Vocabulary& vocab,
                                                  const AffixLexicon& lexicon, std::size_t head,
                                                  std::size_t tail, std::size_t max_len);

struct TaggingExample {
  Example example;
  // Token position of each word's first piece; -1 when truncated away.
  std::vector<std::int32_t> word_starts;
};

// Labels go on the first piece of every word, kNoLabel on the others. Words
// that do not fit in max_len are dropped from the example (word_starts = -1).
// Unknown tags throw InputError.
std::vector<TaggingExample> make_tagging_examples(std::span<const TaggedSentence> sentences,
                                                  std::span<const std::string> tag_set,
                                                  const Vocabulary& vocab,
                                                  const AffixLexicon& lexicon,
                                                  std::size_t max_len);

}  // namespace albt
