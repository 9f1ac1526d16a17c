#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "albt/error.h"
#include "albt/metrics.h"
#include "albt/synth.h"

namespace albt {
namespace {

using Labels = std::vector<std::string>;

const ClassScores& find(const MetricsReport& r, const std::string& label) {
  for (const auto& c : r.per_class) {
    if (c.label == label) return c;
  }
  throw std::runtime_error("missing class " + label);
}

TEST(Confusion, FourItemExample) {
  const Labels gold{"A", "A", "B", "B"}, pred{"A", "B", "B", "B"};
  const auto cm = confusion(gold, pred);
  ASSERT_EQ(cm.classes, (Labels{"A", "B"}));
  EXPECT_EQ(cm.counts(0, 0), 1);
  EXPECT_EQ(cm.counts(0, 1), 1);
  EXPECT_EQ(cm.counts(1, 0), 0);
  EXPECT_EQ(cm.counts(1, 1), 2);
  EXPECT_EQ(cm.total(), 4);
}

TEST(Confusion, DiagonalEmptyAndMismatch) {
  const Labels a{"x", "y", "z", "y"};
  const auto cm = confusion(a, a);
  EXPECT_EQ(cm.counts.diagonal().sum(), cm.total());
  const auto empty = confusion(Labels{}, Labels{});
  EXPECT_EQ(empty.classes.size(), 0u);
  EXPECT_EQ(empty.counts.size(), 0);
  EXPECT_THROW(confusion(Labels{"a"}, Labels{}), InputError);
}

TEST(Confusion, ClassOrderIsGoldThenPred) {
  const auto cm = confusion(Labels{"b", "a"}, Labels{"c", "b"});
  EXPECT_EQ(cm.classes, (Labels{"b", "a", "c"}));
}

TEST(MacroPrf, WorkedExample) {
  const auto r = macro_prf(confusion(Labels{"A", "A", "B", "B"}, Labels{"A", "B", "B", "B"}));
  EXPECT_DOUBLE_EQ(find(r, "A").precision, 1.0);
  EXPECT_DOUBLE_EQ(find(r, "A").recall, 0.5);
  EXPECT_NEAR(find(r, "A").f1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(find(r, "B").precision, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(find(r, "B").recall, 1.0);
  EXPECT_NEAR(find(r, "B").f1, 0.8, 1e-15);
  EXPECT_NEAR(r.precision, 0.833333, 1e-6);
  EXPECT_NEAR(r.recall, 0.75, 1e-12);
  EXPECT_NEAR(r.f1, 0.733333, 1e-6);
}

TEST(MacroPrf, PerfectAndNeverPredicted) {
  const auto perfect = macro_prf(confusion(Labels{"a", "b", "c"}, Labels{"a", "b", "c"}));
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto r = macro_prf(confusion(Labels{"a", "b"}, Labels{"a", "a"}));
  EXPECT_EQ(find(r, "b").precision, 0.0);
  EXPECT_EQ(find(r, "b").f1, 0.0);
}

TEST(MacroPrf, PredictionOnlyClassesAreNotAveraged) {
  const auto r = macro_prf(confusion(Labels{"a", "a"}, Labels{"a", "z"}));
  EXPECT_EQ(find(r, "z").support, 0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
}

struct Tally {
  double p, r, f;
  int tp;
};

// Straight recount from the raw label lists.
std::map<std::string, Tally> brute_force(const Labels& gold, const Labels& pred) {
  std::set<std::string> labels(gold.begin(), gold.end());
  labels.insert(pred.begin(), pred.end());
  std::map<std::string, Tally> out;
  for (const auto& c : labels) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == c && pred[i] == c) ++tp;
      if (gold[i] != c && pred[i] == c) ++fp;
      if (gold[i] == c && pred[i] != c) ++fn;
    }
    Tally t{};
    t.tp = tp;
    t.p = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
    t.r = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
    t.f = t.p + t.r > 0 ? 2 * t.p * t.r / (t.p + t.r) : 0.0;
    out[c] = t;
  }
  return out;
}

TEST(MacroPrf, MatchesBruteForceOnRandomCases) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int classes = 1 + static_cast<int>(rng() % 10);
    const int n = 1 + static_cast<int>(rng() % 50);
    Labels gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = "c" + std::to_string(rng() % classes);
      pred[i] = "c" + std::to_string(rng() % classes);
    }
    const auto oracle = brute_force(gold, pred);
    const auto r = macro_prf(confusion(gold, pred));
    ASSERT_EQ(r.per_class.size(), oracle.size());
    const std::set<std::string> gold_set(gold.begin(), gold.end());
    double mp = 0, mr = 0, mf = 0;
    for (const auto& [label, t] : oracle) {
      const auto& c = find(r, label);
      EXPECT_NEAR(c.precision, t.p, 1e-12);
      EXPECT_NEAR(c.recall, t.r, 1e-12);
      EXPECT_NEAR(c.f1, t.f, 1e-12);
      EXPECT_EQ(c.f1 == 0.0, t.tp == 0);
      EXPECT_LE(c.f1, 1.0);
      if (gold_set.contains(label)) {
        mp += t.p;
        mr += t.r;
        mf += t.f;
      }
    }
    const double k = static_cast<double>(gold_set.size());
    EXPECT_NEAR(r.precision, mp / k, 1e-12);
    EXPECT_NEAR(r.recall, mr / k, 1e-12);
    EXPECT_NEAR(r.f1, mf / k, 1e-12);
  }
}

TEST(MacroPrf, ClassOrderDoesNotChangeMacro) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Labels gold(30), pred(30);
    for (int i = 0; i < 30; ++i) {
      gold[i] = "k" + std::to_string(rng() % 7);
      pred[i] = "k" + std::to_string(rng() % 7);
    }
    const auto a = macro_prf(confusion(gold, pred));
    std::vector<std::size_t> order(30);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Labels g2, p2;
    for (auto i : order) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    const auto b = macro_prf(confusion(g2, p2));
    EXPECT_EQ(a.precision, b.precision);
    EXPECT_EQ(a.recall, b.recall);
    EXPECT_EQ(a.f1, b.f1);
  }
}

TEST(TokenTagMetrics, BinaryKeywordExample) {
  const auto r = token_tag_metrics({{"1", "0", "0", "1"}}, {{"1", "0", "1", "1"}});
  EXPECT_NEAR(r.f1, 0.733333, 1e-6);
}

TEST(TokenTagMetrics, IdenticalIgnoredAndMisaligned) {
  const std::vector<Labels> tags{{"B-PER", "I-PER", "O"}, {"O", "B-LOC"}};
  EXPECT_EQ(token_tag_metrics(tags, tags).f1, 1.0);
  TagMetricsOptions ignore_all;
  ignore_all.ignore_tags = {"B-PER", "I-PER", "O", "B-LOC"};
  EXPECT_THROW(token_tag_metrics(tags, tags, ignore_all), InputError);
  EXPECT_THROW(token_tag_metrics({{"O"}}, {{"O", "O"}}), InputError);
  EXPECT_THROW(token_tag_metrics({{"O"}}, {}), InputError);
}

TEST(TokenTagMetrics, OutsideCanBeExcluded) {
  const std::vector<Labels> gold{{"O", "O", "B-PER", "O"}};
  const std::vector<Labels> pred{{"O", "O", "B-PER", "B-PER"}};
  const auto with_o = token_tag_metrics(gold, pred);
  TagMetricsOptions opts;
  opts.exclude_outside = true;
  const auto without_o = token_tag_metrics(gold, pred, opts);
  // PER: P=0.5 R=1 F=2/3. O: P=1 R=2/3 F=0.8.
  EXPECT_NEAR(without_o.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(with_o.f1, (2.0 / 3.0 + 0.8) / 2.0, 1e-12);
}

TEST(Entities, Extraction) {
  EXPECT_EQ(extract_entities(Labels{"B-PER", "I-PER", "O", "B-LOC"}),
            (std::vector<Entity>{{"PER", 0, 1}, {"LOC", 3, 3}}));
  EXPECT_TRUE(extract_entities(Labels{"O", "O"}).empty());
  EXPECT_EQ(extract_entities(Labels{"I-PER"}), (std::vector<Entity>{{"PER", 0, 0}}));
  EXPECT_EQ(extract_entities(Labels{"B-PER", "I-LOC", "I-LOC", "B-LOC", "B-LOC"}),
            (std::vector<Entity>{{"PER", 0, 0}, {"LOC", 1, 2}, {"LOC", 3, 3}, {"LOC", 4, 4}}));
}

TEST(Entities, RoundTripOnSyntheticData) {
  const auto data = synth_tagging(kDefaultEntityTypes, 300, 9);
  for (const auto& s : data.sentences) {
    const auto entities = extract_entities(s.tags);
    EXPECT_EQ(entities_to_iob(entities, s.tags.size()), s.tags);
    EXPECT_EQ(extract_entities(entities_to_iob(entities, s.tags.size())), entities);
  }
}

TEST(EntityPrf, Examples) {
  const std::vector<Entity> g{{"PER", 0, 1}};
  EXPECT_EQ(entity_prf(g, g).f1, 1.0);
  const std::vector<Entity> wrong{{"PER", 0, 0}};
  EXPECT_EQ(entity_prf(g, wrong).f1, 0.0);
  const std::vector<Entity> two{{"PER", 0, 1}, {"LOC", 3, 4}};
  EXPECT_DOUBLE_EQ(entity_prf(two, g).f1, 0.5);
}

TEST(EntityPrf, MatchesWithinSentence) {
  const std::vector<std::vector<Entity>> gold{{{"PER", 0, 0}}, {}};
  const std::vector<std::vector<Entity>> pred{{}, {{"PER", 0, 0}}};
  const auto r = entity_prf(gold, pred);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(find(r, "PER").support, 1);
}

TEST(Report, PlainMacroRow) {
  MetricsReport perfect;
  perfect.precision = perfect.recall = perfect.f1 = 1.0;
  EXPECT_NE(emit_report(perfect, ReportFormat::kPlain).find("1.000000 1.000000 1.000000"),
            std::string::npos);
  const auto r = macro_prf(confusion(Labels{"A", "A", "B", "B"}, Labels{"A", "B", "B", "B"}));
  const auto text = emit_report(r, ReportFormat::kPlain);
  EXPECT_NE(text.find("Macro-Average 0.833333 0.750000 0.733333\n"), std::string::npos);
  EXPECT_NE(text.find("Precision"), std::string::npos);
  EXPECT_NE(text.find("Recall"), std::string::npos);
}

TEST(Report, DelimitedRoundTrip) {
  auto r = macro_prf(confusion(Labels{"A", "A", "B,\"q\"", "B,\"q\""}, Labels{"A", "B,\"q\"", "B,\"q\"", "B,\"q\""}));
  const auto text = emit_report(r, ReportFormat::kDelimited);
  const auto back = parse_delimited_report(text);
  ASSERT_EQ(back.per_class.size(), r.per_class.size());
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    EXPECT_EQ(back.per_class[i].label, r.per_class[i].label);
    EXPECT_NEAR(back.per_class[i].f1, r.per_class[i].f1, 5e-7);
    EXPECT_EQ(back.per_class[i].support, r.per_class[i].support);
  }
  EXPECT_NEAR(back.f1, r.f1, 5e-7);
  EXPECT_EQ(emit_report(back, ReportFormat::kDelimited), text);
  EXPECT_THROW(parse_delimited_report("nonsense"), InputError);
  EXPECT_THROW(parse_delimited_report("label,precision,recall,f1,support\nmacro,x,1,1,1\n"), InputError);
}

}  // namespace
}  // namespace albt
