#include "albt/metrics.h"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "albt/error.h"

namespace albt {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassScores score(std::string label, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassScores s;
  s.label = std::move(label);
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.support = tp + fn;
  return s;
}

// Averages in label order so the result does not depend on class order.
void fill_macro(MetricsReport& report, const std::set<std::string>& excluded) {
  std::vector<const ClassScores*> used;
  for (const auto& c : report.per_class) {
    report.support += c.support;
    if (c.support > 0 && !excluded.contains(c.label)) used.push_back(&c);
  }
  std::sort(used.begin(), used.end(), [](const auto* a, const auto* b) { return a->label < b->label; });
  if (used.empty()) return;
  for (const auto* c : used) {
    report.precision += c->precision;
    report.recall += c->recall;
    report.f1 += c->f1;
  }
  const double n = static_cast<double>(used.size());
  report.precision /= n;
  report.recall /= n;
  report.f1 /= n;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> csv_row(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw InputError("unterminated quote in report");
  return out;
}

double parse_value(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("bad number in report: " + s);
  }
  if (used != s.size()) throw InputError("bad number in report: " + s);
  return v;
}

std::int64_t parse_count(const std::string& s) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw InputError("bad count in report: " + s);
  }
  if (used != s.size()) throw InputError("bad count in report: " + s);
  return v;
}

}  // namespace

int ConfusionMatrix::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return static_cast<int>(i);
  }
  return -1;
}

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size()) {
    throw InputError(fmt::format("confusion: {} gold labels but {} predictions", gold.size(), pred.size()));
  }
  ConfusionMatrix cm;
  std::unordered_map<std::string, int> index;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(cm.classes.size()));
    if (inserted) cm.classes.push_back(label);
    return it->second;
  };
  for (const auto& g : gold) intern(g);
  for (const auto& p : pred) intern(p);
  const auto n = static_cast<Eigen::Index>(cm.classes.size());
  cm.counts.setZero(n, n);
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts(index[gold[i]], index[pred[i]]);
  return cm;
}

MetricsReport macro_prf(const ConfusionMatrix& cm, std::span<const std::string> exclude) {
  MetricsReport report;
  for (Eigen::Index k = 0; k < cm.counts.rows(); ++k) {
    const auto tp = cm.counts(k, k);
    report.per_class.push_back(score(cm.classes[k], tp, cm.counts.col(k).sum() - tp,
                                     cm.counts.row(k).sum() - tp));
  }
  fill_macro(report, {exclude.begin(), exclude.end()});
  return report;
}

MetricsReport token_tag_metrics(const std::vector<std::vector<std::string>>& gold,
                                const std::vector<std::vector<std::string>>& pred,
                                const TagMetricsOptions& options) {
  if (gold.size() != pred.size()) {
    throw InputError(fmt::format("{} gold sentences but {} predicted", gold.size(), pred.size()));
  }
  const std::set<std::string> ignore(options.ignore_tags.begin(), options.ignore_tags.end());
  std::vector<std::string> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw InputError(fmt::format("sentence {}: {} gold tags but {} predicted", s + 1,
                                   gold[s].size(), pred[s].size()));
    }
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      if (ignore.contains(gold[s][i])) continue;
      g.push_back(gold[s][i]);
      p.push_back(pred[s][i]);
    }
  }
  if (g.empty()) throw InputError("no evaluable positions");
  std::vector<std::string> exclude;
  if (options.exclude_outside) exclude.push_back("O");
  return macro_prf(confusion(g, p), exclude);
}

std::vector<Entity> extract_entities(std::span<const std::string> tags) {
  std::vector<Entity> out;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    const bool begin = tag.starts_with("B-");
    const bool inside = tag.starts_with("I-");
    if (!begin && !inside) {
      open = false;
      continue;
    }
    const auto type = tag.substr(2);
    const auto pos = static_cast<std::int64_t>(i);
    if (inside && open && out.back().type == type) {
      out.back().end = pos;
    } else {
      out.push_back({type, pos, pos});
      open = true;
    }
  }
  return out;
}

std::vector<std::string> entities_to_iob(std::span<const Entity> entities, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& e : entities) {
    if (e.start < 0 || e.end < e.start || static_cast<std::size_t>(e.end) >= length) {
      throw InputError(fmt::format("entity {} [{}, {}] outside sentence of length {}", e.type, e.start,
                                   e.end, length));
    }
    tags[e.start] = "B-" + e.type;
    for (auto i = e.start + 1; i <= e.end; ++i) tags[i] = "I-" + e.type;
  }
  return tags;
}

MetricsReport entity_prf(const std::vector<std::vector<Entity>>& gold,
                         const std::vector<std::vector<Entity>>& pred) {
  if (gold.size() != pred.size()) {
    throw InputError(fmt::format("{} gold sentences but {} predicted", gold.size(), pred.size()));
  }
  struct Tally {
    std::int64_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Tally> by_type;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const std::set<Entity> g(gold[s].begin(), gold[s].end());
    const std::set<Entity> p(pred[s].begin(), pred[s].end());
    for (const auto& e : g) {
      if (p.contains(e)) {
        ++by_type[e.type].tp;
      } else {
        ++by_type[e.type].fn;
      }
    }
    for (const auto& e : p) {
      if (!g.contains(e)) ++by_type[e.type].fp;
    }
  }
  MetricsReport report;
  for (const auto& [type, t] : by_type) report.per_class.push_back(score(type, t.tp, t.fp, t.fn));
  fill_macro(report, {});
  return report;
}

MetricsReport entity_prf(std::span<const Entity> gold, std::span<const Entity> pred) {
  return entity_prf(std::vector<std::vector<Entity>>{{gold.begin(), gold.end()}},
                    std::vector<std::vector<Entity>>{{pred.begin(), pred.end()}});
}

std::string emit_report(const MetricsReport& report, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kDelimited) {
    out += "label,precision,recall,f1,support\n";
    for (const auto& c : report.per_class) {
      out += fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", csv_field(c.label), c.precision, c.recall,
                         c.f1, c.support);
    }
    out += fmt::format("macro,{:.6f},{:.6f},{:.6f},{}\n", report.precision, report.recall, report.f1,
                       report.support);
    return out;
  }
  std::size_t width = 13;
  for (const auto& c : report.per_class) width = std::max(width, c.label.size());
  out += fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>9}\n", "Label", width, "Precision", "Recall",
                     "F1", "Support");
  for (const auto& c : report.per_class) {
    out += fmt::format("{:<{}}  {:>9.6f}  {:>9.6f}  {:>9.6f}  {:>9}\n", c.label, width, c.precision,
                       c.recall, c.f1, c.support);
  }
  out += fmt::format("Macro-Average {:.6f} {:.6f} {:.6f}\n", report.precision, report.recall, report.f1);
  return out;
}

MetricsReport parse_delimited_report(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    if (end > pos) lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.size() < 2 || lines.front() != "label,precision,recall,f1,support") {
    throw InputError("report is missing its header or macro row");
  }
  MetricsReport report;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = csv_row(lines[i]);
    if (row.size() != 5) throw InputError(fmt::format("report line {} has {} fields", i + 1, row.size()));
    ClassScores c{row[0], parse_value(row[1]), parse_value(row[2]), parse_value(row[3]), parse_count(row[4])};
    if (i + 1 == lines.size()) {
      if (c.label != "macro") throw InputError("last report row must be the macro row");
      report.precision = c.precision;
      report.recall = c.recall;
      report.f1 = c.f1;
      report.support = c.support;
    } else {
      report.per_class.push_back(std::move(c));
    }
  }
  return report;
}

}  // namespace albt
