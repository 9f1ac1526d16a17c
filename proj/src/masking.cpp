#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "albt/corpus.h"
#include "albt/error.h"
#include "albt/seed.h"

namespace albt {

MaskedSequence whole_word_mask(const TokenizedSequence& seq, std::int32_t vocab_size,
                               const MaskingOptions& options, std::uint64_t seed,
                               std::uint64_t example_index) {
  if (seq.word_boundaries.empty()) throw InputError("whole_word_mask: sequence has no words");
  std::vector<WordSpan> units;
  if (options.whole_word) {
    units = seq.word_boundaries;
  } else {
    for (const auto& span : seq.word_boundaries) {
      for (auto t = span.start; t <= span.end; ++t) units.push_back({t, t});
    }
  }
  std::int64_t content = 0;
  for (const auto& u : units) content += u.size();
  // Guard against 0.15 * 20 evaluating to 3.0000000000000004.
  const auto budget = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(options.rate * static_cast<double>(content) - 1e-9)));

  std::mt19937_64 rng(derive_seed(seed, example_index));
  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  MaskedSequence out;
  out.ids = seq.ids;
  out.labels.assign(seq.ids.size(), kNoLabel);
  std::uniform_real_distribution<double> action_draw(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> random_id(kNumSpecialTokens,
                                                        std::max(kNumSpecialTokens, vocab_size - 1));
  std::int64_t covered = 0;
  for (auto idx : order) {
    if (covered >= budget) break;
    const auto span = units[idx];
    const double u = action_draw(rng);
    MaskAction action = MaskAction::kKeep;
    if (u < options.mask_probability) {
      action = MaskAction::kMask;
    } else if (u < options.mask_probability + options.random_probability) {
      action = MaskAction::kRandom;
    }
    for (auto t = span.start; t <= span.end; ++t) {
      out.labels[t] = seq.ids[t];
      if (action == MaskAction::kMask) {
        out.ids[t] = kMaskId;
      } else if (action == MaskAction::kRandom && vocab_size > kNumSpecialTokens) {
        out.ids[t] = random_id(rng);
      }
    }
    out.selections.push_back({span, action});
    covered += span.size();
  }
  std::sort(out.selections.begin(), out.selections.end(),
            [](const MaskSelection& a, const MaskSelection& b) { return a.span.start < b.span.start; });
  return out;
}

std::vector<Example> make_mlm_examples(std::span<const TokenizedSequence> sequences,
                                       std::int32_t vocab_size, const MaskingOptions& options,
                                       std::uint64_t seed) {
  std::vector<Example> out;
  out.reserve(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto masked = whole_word_mask(sequences[i], vocab_size, options, seed, i);
    Example ex;
    ex.ids.reserve(masked.ids.size() + 2);
    ex.ids.push_back(kClsId);
    ex.ids.insert(ex.ids.end(), masked.ids.begin(), masked.ids.end());
    ex.ids.push_back(kSepId);
    ex.token_labels.push_back(kNoLabel);
    ex.token_labels.insert(ex.token_labels.end(), masked.labels.begin(), masked.labels.end());
    ex.token_labels.push_back(kNoLabel);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace albt
