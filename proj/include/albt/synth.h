#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "albt/corpus.h"

namespace albt {

// Deterministic synthetic Arabic-script data. Words are pseudo-stems whose
// first and last letters never collide with the built-in affix lexicon, so
// segmentation only splits affixes the generator attached on purpose.

// `count` distinct pseudo-stems of 3 to 5 letters.
std::vector<std::string> synth_stems(std::size_t count, std::uint64_t seed);

// Template sentences over a closed vocabulary.
std::vector<std::string> synth_mlm_corpus(std::size_t sentences, std::uint64_t seed);

struct SynthClassificationOptions {
  int classes = 3;
  std::size_t documents = 300;
  std::size_t min_words = 540;
  std::size_t max_words = 640;
  double keyword_rate = 0.08;
  std::size_t keywords_per_class = 12;
};

// Document i has label i % classes and contains at least one keyword from its
// class's (disjoint) keyword set; all other words come from a shared pool.
ClassificationDataset synth_classification(const SynthClassificationOptions& options,
                                           std::uint64_t seed);

inline constexpr int kDefaultEntityTypes = 17;

// Sentences with entity phrases drawn from per-type gazetteers, tagged IOB.
TaggingDataset synth_tagging(int entity_types, std::size_t sentences, std::uint64_t seed);

// Sentences with keywords tagged "1" and all other words "0".
TaggingDataset synth_keywords(std::size_t sentences, std::uint64_t seed);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// 80/10/10 with the remainder going to train.
SplitSizes split_sizes(std::size_t n);

template <typename T>
struct Splits {
  std::vector<T> train, val, test;
};

template <typename T>
Splits<T> split_80_10_10(std::span<const T> items) {
  const auto sizes = split_sizes(items.size());
  Splits<T> out;
  out.train.assign(items.begin(), items.begin() + sizes.train);
  out.val.assign(items.begin() + sizes.train, items.begin() + sizes.train + sizes.val);
  out.test.assign(items.begin() + sizes.train + sizes.val, items.end());
  return out;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace albt
