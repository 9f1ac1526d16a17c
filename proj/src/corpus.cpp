#include <algorithm>
#include <unordered_set>

#include "albt/corpus.h"
#include "albt/error.h"
#include "albt/utf8.h"

namespace albt {

std::vector<std::string> dedup(std::span<const std::string> sentences) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : sentences) {
    auto norm = normalize(s);
    if (norm.empty()) continue;
    if (seen.insert(norm).second) out.push_back(std::move(norm));
  }
  return out;
}

namespace {

bool is_terminal(char32_t cp) {
  return cp == U'.' || cp == U'?' || cp == U'!' || cp == U'\n' || cp == 0x061F || cp == 0x061B;
}

bool ends_with_comma(std::string_view word) {
  return word.ends_with(",") || word.ends_with("\xD8\x8C");  // U+060C
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r')) ++i;
    const auto start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r') ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::string join(std::span<const std::string> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::vector<std::string> sentence_split(std::string_view document, std::size_t max_words) {
  if (max_words == 0) throw ConfigError("sentence_split: max_words must be positive");
  std::vector<std::string> fragments;
  std::string current;
  for (std::size_t i = 0; i < document.size();) {
    const auto len = utf8::sequence_length(document, i);
    if (is_terminal(utf8::decode_at(document, i, len))) {
      fragments.push_back(std::move(current));
      current.clear();
    } else {
      current.append(document.substr(i, len));
    }
    i += len;
  }
  fragments.push_back(std::move(current));

  std::vector<std::string> out;
  for (const auto& fragment : fragments) {
    auto words = split_words(fragment);
    std::span<const std::string> rest(words);
    while (rest.size() > max_words) {
      std::size_t cut = max_words;
      for (std::size_t k = max_words; k >= 1; --k) {
        if (ends_with_comma(rest[k - 1])) {
          cut = k;
          break;
        }
      }
      out.push_back(join(rest.first(cut)));
      rest = rest.subspan(cut);
    }
    if (!rest.empty()) out.push_back(join(rest));
  }
  return out;
}

std::vector<TokenizedSequence> build_pretrain_examples(std::span<const std::string> sentences,
                                                       const Vocabulary& vocab,
                                                       const AffixLexicon& lexicon,
                                                       std::size_t max_len) {
  if (max_len < 8) throw ConfigError("build_pretrain_examples: max_len must be at least 8");
  const auto budget = static_cast<std::int32_t>(max_len - 2);
  std::vector<TokenizedSequence> out;
  TokenizedSequence current;
  auto flush = [&] {
    if (!current.ids.empty()) out.push_back(std::move(current));
    current = {};
  };
  for (const auto& sentence : sentences) {
    auto seq = encode(sentence, vocab, lexicon);
    if (seq.ids.empty()) continue;
    const auto size = static_cast<std::int32_t>(seq.ids.size());
    if (size > budget) {
      flush();
      TokenizedSequence cut;
      for (const auto& span : seq.word_boundaries) {
        if (span.end >= budget) break;
        cut.word_boundaries.push_back(span);
      }
      if (cut.word_boundaries.empty()) {
        // A single word longer than the budget keeps its leading pieces.
        cut.word_boundaries.push_back({0, budget - 1});
      }
      const auto keep = cut.word_boundaries.back().end + 1;
      cut.ids.assign(seq.ids.begin(), seq.ids.begin() + keep);
      out.push_back(std::move(cut));
      continue;
    }
    if (static_cast<std::int32_t>(current.ids.size()) + size > budget) flush();
    const auto offset = static_cast<std::int32_t>(current.ids.size());
    current.ids.insert(current.ids.end(), seq.ids.begin(), seq.ids.end());
    for (auto span : seq.word_boundaries) {
      current.word_boundaries.push_back({span.start + offset, span.end + offset});
    }
  }
  flush();
  return out;
}

std::vector<std::int32_t> head_tails_truncate(std::span<const std::int32_t> content_ids,
                                              std::size_t head, std::size_t tail,
                                              std::size_t max_len) {
  if (head + tail + 2 > max_len) {
    throw ConfigError("head + tail + 2 special tokens exceed the maximum sequence length");
  }
  if (content_ids.size() <= head + tail) return {content_ids.begin(), content_ids.end()};
  std::vector<std::int32_t> out(content_ids.begin(), content_ids.begin() + head);
  out.insert(out.end(), content_ids.end() - tail, content_ids.end());
  return out;
}

}  // namespace albt
