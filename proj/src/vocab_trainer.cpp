#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "albt/error.h"
#include "albt/tokenizer.h"
#include "albt/utf8.h"

namespace albt {

namespace {

using Pair = std::pair<std::string, std::string>;

struct WordEntry {
  std::vector<std::string> symbols;
  long count = 0;
};

class PairIndex {
 public:
  void add_word(const WordEntry& w, std::size_t idx) {
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      Pair p{w.symbols[i], w.symbols[i + 1]};
      counts_[p] += w.count;
      words_[p].insert(idx);
    }
  }

  void remove_word(const WordEntry& w, std::size_t idx) {
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      Pair p{w.symbols[i], w.symbols[i + 1]};
      auto it = counts_.find(p);
      if (it == counts_.end()) continue;
      it->second -= w.count;
      if (it->second <= 0) counts_.erase(it);
      auto wit = words_.find(p);
      if (wit != words_.end()) {
        wit->second.erase(idx);
        if (wit->second.empty()) words_.erase(wit);
      }
    }
  }

  // Highest count; ties go to the lexicographically smallest pair.
  std::optional<std::pair<Pair, long>> best() const {
    std::optional<std::pair<Pair, long>> out;
    for (const auto& [p, c] : counts_) {
      if (!out || c > out->second) out = {p, c};
    }
    return out;
  }

  std::vector<std::size_t> words_with(const Pair& p) const {
    auto it = words_.find(p);
    if (it == words_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  std::map<Pair, long> counts_;
  std::map<Pair, std::set<std::size_t>> words_;
};

std::vector<std::string> initial_symbols(std::string_view morph) {
  std::vector<std::string> symbols;
  for (auto ch : utf8::characters(morph)) {
    symbols.push_back(symbols.empty() ? std::string(ch)
                                      : std::string(kContinuationMarker) + std::string(ch));
  }
  return symbols;
}

}  // namespace

VocabTrainingResult train_wordpiece(std::span<const std::string> corpus, std::size_t target_size,
                                    const AffixLexicon& lexicon) {
  std::map<std::string, long> stem_counts;
  std::set<std::string> alphabet;
  for (const auto& line : corpus) {
    for (const auto& word : pretokenize(normalize(line))) {
      for (auto& morph : segment_affixes(word, lexicon)) {
        for (auto ch : utf8::characters(morph)) {
          if (ch.size() != 1 || ch[0] != kAffixMarker || utf8::length(morph) == 1) {
            alphabet.emplace(ch);
          }
        }
        if (is_prefix_piece(morph) || is_suffix_piece(morph)) {
          alphabet.insert(morph);
        } else {
          ++stem_counts[morph];
        }
      }
    }
  }
  if (alphabet.empty()) throw EmptyCorpus("vocabulary training corpus contains no words");

  std::vector<WordEntry> words;
  for (const auto& [stem, count] : stem_counts) {
    auto symbols = initial_symbols(stem);
    for (std::size_t i = 1; i < symbols.size(); ++i) alphabet.insert(symbols[i]);
    words.push_back({std::move(symbols), count});
  }

  const auto floor_size = static_cast<std::size_t>(kNumSpecialTokens) + alphabet.size();
  if (target_size < floor_size) {
    throw ConfigError(fmt::format(
        "target vocabulary size {} cannot hold {} specials and {} alphabet symbols", target_size,
        kNumSpecialTokens, alphabet.size()));
  }

  VocabTrainingResult result;
  for (const auto& symbol : alphabet) result.vocab.add(symbol);

  PairIndex index;
  for (std::size_t i = 0; i < words.size(); ++i) index.add_word(words[i], i);

  while (static_cast<std::size_t>(result.vocab.size()) < target_size) {
    const auto best = index.best();
    if (!best || best->second < 2) break;
    const auto& [left, right] = best->first;
    const std::string merged = left + right.substr(kContinuationMarker.size());
    for (auto idx : index.words_with(best->first)) {
      auto& w = words[idx];
      index.remove_word(w, idx);
      std::vector<std::string> next;
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == left && w.symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
      index.add_word(w, idx);
    }
    result.merges.push_back(best->first);
    result.vocab.add(merged);
  }
  return result;
}

}  // namespace albt
