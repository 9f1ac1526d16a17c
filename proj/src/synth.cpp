#include "albt/synth.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "albt/error.h"
#include "albt/seed.h"

namespace albt {

namespace {

// No prefix of the built-in lexicon starts with these letters.
constexpr std::array<std::string_view, 21> kStartLetters = {
    "ت", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "ش", "ص",
    "ض", "ط", "ظ", "ع", "غ", "ق", "م", "ن", "ي", "ه"};
// No suffix of the built-in lexicon ends with these letters.
constexpr std::array<std::string_view, 21> kEndLetters = {
    "ب", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "س", "ش",
    "ص", "ض", "ط", "ظ", "ع", "غ", "ف", "ق", "ل", "و"};
constexpr std::array<std::string_view, 27> kInnerLetters = {
    "ب", "ت", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "س", "ش", "ص", "ض",
    "ط", "ظ", "ع", "غ", "ف", "ق", "ك", "ل", "م", "ن", "ه", "و", "ي"};

constexpr std::array<std::string_view, 4> kPrefixes = {"ال", "و", "وال", "ب"};
constexpr std::array<std::string_view, 4> kSuffixes = {"ها", "هم", "ات", "ون"};

constexpr std::array<std::string_view, kDefaultEntityTypes> kEntityTypes = {
    "PER",   "LOC",    "ORG",     "DATE",  "TIME",    "MONEY",   "PERCENT", "LAW",      "COURT",
    "CASE",  "ARTICLE", "JUDGE", "LAWYER", "CRIME",  "PENALTY", "DOC",     "AUTHORITY"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen_);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_) < p; }

  template <typename C>
  const auto& pick(const C& c) {
    return c[below(c.size())];
  }

 private:
  std::mt19937_64 gen_;
};

// Slices a single stem pool into disjoint named groups.
class StemPool {
 public:
  StemPool(std::size_t total, std::uint64_t seed) : stems_(synth_stems(total, seed)) {}

  std::vector<std::string> take(std::size_t n) {
    if (next_ + n > stems_.size()) throw ConfigError("synthetic stem pool exhausted");
    std::vector<std::string> out(stems_.begin() + next_, stems_.begin() + next_ + n);
    next_ += n;
    return out;
  }

 private:
  std::vector<std::string> stems_;
  std::size_t next_ = 0;
};

std::string affixed(Rng& rng, const std::string& stem, double p_prefix, double p_suffix) {
  std::string out;
  if (rng.chance(p_prefix)) out += rng.pick(kPrefixes);
  out += stem;
  if (rng.chance(p_suffix)) out += rng.pick(kSuffixes);
  return out;
}

}  // namespace

std::vector<std::string> synth_stems(std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5743));
  std::set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 100 + 1000) throw ConfigError("cannot generate enough distinct stems");
    std::string stem(rng.pick(kStartLetters));
    const auto inner = rng.between(1, 3);
    for (std::size_t i = 0; i < inner; ++i) stem += rng.pick(kInnerLetters);
    stem += rng.pick(kEndLetters);
    if (seen.insert(stem).second) out.push_back(std::move(stem));
  }
  return out;
}

std::vector<std::string> synth_mlm_corpus(std::size_t sentences, std::uint64_t seed) {
  StemPool pool(70, seed);
  enum Slot { kNoun, kVerb, kAdj, kPlace, kParticle };
  const std::array<std::vector<std::string>, 5> words = {pool.take(24), pool.take(14), pool.take(12),
                                                         pool.take(12), pool.take(6)};
  const std::vector<std::vector<Slot>> templates = {
      {kVerb, kNoun, kAdj, kParticle, kPlace},
      {kNoun, kVerb, kNoun, kParticle, kPlace, kAdj},
      {kVerb, kNoun, kNoun, kAdj},
      {kParticle, kPlace, kVerb, kNoun, kAdj, kNoun},
      {kNoun, kAdj, kVerb, kParticle, kNoun, kParticle, kPlace},
      {kVerb, kNoun, kParticle, kNoun, kAdj}};
  Rng rng(derive_seed(seed, 1));
  std::vector<std::string> out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string line;
    for (auto slot : rng.pick(templates)) {
      if (!line.empty()) line += ' ';
      const auto& stem = rng.pick(words[slot]);
      if (slot == kNoun) {
        line += affixed(rng, stem, 0.3, 0.2);
      } else if (slot == kVerb) {
        line += affixed(rng, stem, 0.2, 0.0);
      } else {
        line += stem;
      }
    }
    out.push_back(std::move(line));
  }
  return out;
}

ClassificationDataset synth_classification(const SynthClassificationOptions& options,
                                           std::uint64_t seed) {
  if (options.classes < 2) throw ConfigError("classification synth needs at least 2 classes");
  if (options.min_words < 1 || options.max_words < options.min_words) {
    throw ConfigError("invalid synthetic document length range");
  }
  const auto k = static_cast<std::size_t>(options.classes);
  StemPool pool(k * options.keywords_per_class + 400, seed);
  std::vector<std::vector<std::string>> keywords;
  for (std::size_t c = 0; c < k; ++c) keywords.push_back(pool.take(options.keywords_per_class));
  const auto filler = pool.take(400);

  ClassificationDataset ds;
  for (std::size_t c = 0; c < k; ++c) ds.labels.push_back(fmt::format("class{}", c));
  Rng rng(derive_seed(seed, 2));
  for (std::size_t i = 0; i < options.documents; ++i) {
    const auto label = i % k;
    const auto n = rng.between(options.min_words, options.max_words);
    const auto forced = rng.below(n);
    std::string text;
    for (std::size_t w = 0; w < n; ++w) {
      if (w > 0) text += (w % 12 == 0) ? ". " : " ";
      if (w == forced || rng.chance(options.keyword_rate)) {
        text += affixed(rng, rng.pick(keywords[label]), 0.2, 0.1);
      } else {
        text += affixed(rng, rng.pick(filler), 0.2, 0.15);
      }
    }
    text += '.';
    ds.documents.push_back({std::move(text), static_cast<std::int32_t>(label)});
  }
  return ds;
}

TaggingDataset synth_tagging(int entity_types, std::size_t sentences, std::uint64_t seed) {
  if (entity_types < 1) throw ConfigError("tagging synth needs at least one entity type");
  const auto types = static_cast<std::size_t>(entity_types);
  StemPool pool(types * 16 + 150, seed);
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> heads, inners;
  for (std::size_t t = 0; t < types; ++t) {
    names.push_back(t < kEntityTypes.size() ? std::string(kEntityTypes[t]) : fmt::format("T{}", t));
    heads.push_back(pool.take(8));
    inners.push_back(pool.take(8));
  }
  const auto filler = pool.take(150);

  TaggingDataset ds;
  ds.scheme = TagScheme::kIob;
  ds.tag_set.push_back("O");
  for (const auto& name : names) {
    ds.tag_set.push_back("B-" + name);
    ds.tag_set.push_back("I-" + name);
  }
  Rng rng(derive_seed(seed, 3));
  for (std::size_t s = 0; s < sentences; ++s) {
    TaggedSentence sent;
    auto add_filler = [&](std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        sent.words.push_back(affixed(rng, rng.pick(filler), 0.15, 0.1));
        sent.tags.push_back("O");
      }
    };
    const auto entities = rng.between(1, 3);
    add_filler(rng.between(0, 3));
    for (std::size_t e = 0; e < entities; ++e) {
      const auto t = rng.below(types);
      const auto len = rng.between(1, 3);
      for (std::size_t i = 0; i < len; ++i) {
        sent.words.push_back(i == 0 ? rng.pick(heads[t]) : rng.pick(inners[t]));
        sent.tags.push_back((i == 0 ? "B-" : "I-") + names[t]);
      }
      add_filler(rng.between(1, 4));
    }
    ds.sentences.push_back(std::move(sent));
  }
  return ds;
}

TaggingDataset synth_keywords(std::size_t sentences, std::uint64_t seed) {
  StemPool pool(40 + 200, seed);
  const auto keywords = pool.take(40);
  const auto filler = pool.take(200);
  TaggingDataset ds;
  ds.scheme = TagScheme::kBinary;
  ds.tag_set = {"0", "1"};
  Rng rng(derive_seed(seed, 4));
  for (std::size_t s = 0; s < sentences; ++s) {
    TaggedSentence sent;
    const auto n = rng.between(10, 20);
    const auto forced = rng.below(n);
    for (std::size_t w = 0; w < n; ++w) {
      const bool key = w == forced || rng.chance(0.12);
      sent.words.push_back(key ? affixed(rng, rng.pick(keywords), 0.2, 0.0)
                               : affixed(rng, rng.pick(filler), 0.15, 0.1));
      sent.tags.push_back(key ? "1" : "0");
    }
    ds.sentences.push_back(std::move(sent));
  }
  return ds;
}

SplitSizes split_sizes(std::size_t n) {
  SplitSizes s;
  s.val = n / 10;
  s.test = n / 10;
  s.train = n - s.val - s.test;
  return s;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace albt
