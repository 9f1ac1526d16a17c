#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace albt {

struct ConfusionMatrix {
  std::vector<std::string> classes;
  // Rows are gold, columns predicted.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  std::int64_t total() const { return counts.sum(); }
  // -1 when absent.
  int index_of(std::string_view label) const;
};

// Class order is first appearance in gold, then in pred. InputError on a
// length mismatch.
ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred);

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct MetricsReport {
  std::vector<ClassScores> per_class;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

// Per-class P/R/F1 with 0 for empty denominators. The macro values average
// over classes with gold support, leaving out `exclude`.
MetricsReport macro_prf(const ConfusionMatrix& cm, std::span<const std::string> exclude = {});

struct TagMetricsOptions {
  // Leave "O" out of the macro average (its positions still count).
  bool exclude_outside = false;
  // Positions whose gold tag is in this list are skipped.
  std::vector<std::string> ignore_tags;
};

// Token-level macro P/R/F1 over all non-ignored positions. InputError on
// misaligned input or when nothing is left to score.
MetricsReport token_tag_metrics(const std::vector<std::vector<std::string>>& gold,
                                const std::vector<std::vector<std::string>>& pred,
                                const TagMetricsOptions& options = {});

struct Entity {
  std::string type;
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive

  auto operator<=>(const Entity&) const = default;
};

// Maximal B-X I-X* runs. An I-X that does not continue an X entity opens a
// new one. Tags other than B-*/I-* count as outside.
std::vector<Entity> extract_entities(std::span<const std::string> tags);

// Inverse of extract_entities for non-overlapping entities.
std::vector<std::string> entities_to_iob(std::span<const Entity> entities, std::size_t length);

// Strict span matching, macro over entity types present in gold. Entities are
// matched within the same sentence.
MetricsReport entity_prf(const std::vector<std::vector<Entity>>& gold,
                         const std::vector<std::vector<Entity>>& pred);
MetricsReport entity_prf(std::span<const Entity> gold, std::span<const Entity> pred);

enum class ReportFormat { kPlain, kDelimited };

// Six decimals. The plain form ends with the line
// "Macro-Average <P> <R> <F1>"; the delimited form is CSV with a header row
// and a final "macro" row.
std::string emit_report(const MetricsReport& report, ReportFormat format);
// Parses the delimited form. InputError on malformed text.
MetricsReport parse_delimited_report(std::string_view text);

}  // namespace albt
