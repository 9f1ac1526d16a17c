#include <chrono>
#include <cstring>
#include <map>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "albt/grad_check.h"
#include "albt/model.h"

namespace albt {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.num_layers = 2;
  c.hidden = 32;
  c.heads = 2;
  c.ff_dim = 64;
  c.vocab_size = 32;
  c.max_positions = 8;
  c.num_classes = 3;
  c.num_tags = 5;
  return c;
}

// Spreads weights beyond the 0.02 init so every gradient is large enough to
// be resolved by central differences.
template <typename S>
ModelParameters<S> spread_params(const ModelConfig& c, std::uint64_t seed) {
  auto params = init_parameters<S>(c, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& [name, t] : params.entries()) {
    auto& d = t.mutable_data();
    for (auto& v : d) {
      if (name.ends_with(".gamma")) {
        v = static_cast<S>(1.0 + 0.2 * noise(rng));
      } else if (t.rank() == 1) {
        v = static_cast<S>(0.2 * noise(rng));
      } else {
        v = static_cast<S>(0.3 * noise(rng));
      }
    }
  }
  return params;
}

Batch make_batch(std::vector<std::vector<std::int32_t>> rows, std::int64_t cols) {
  Batch b;
  const auto n = static_cast<std::int64_t>(rows.size());
  b.input_ids = IdMatrix::Constant(n, cols, kPadId);
  b.attention_mask = IdMatrix::Zero(n, cols);
  b.segment_ids = IdMatrix::Zero(n, cols);
  b.token_labels = IdMatrix::Constant(n, cols, kNoLabel);
  for (std::int64_t r = 0; r < n; ++r) {
    for (std::size_t t = 0; t < rows[r].size(); ++t) {
      b.input_ids(r, t) = rows[r][t];
      b.attention_mask(r, t) = 1;
    }
    b.sequence_labels.push_back(static_cast<std::int32_t>(r % 3));
  }
  return b;
}

Batch check_batch() {
  auto b = make_batch({{kClsId, 7, 12, kMaskId, 30, 9, kSepId}, {kClsId, 5, kMaskId, 21, kSepId}}, 8);
  b.token_labels(0, 3) = 17;
  b.token_labels(0, 5) = 9;
  b.token_labels(1, 2) = 6;
  return b;
}

Batch tag_batch() {
  auto b = make_batch({{kClsId, 7, 12, 8, 30, 9, kSepId}, {kClsId, 5, 11, 21, kSepId}}, 8);
  const std::vector<std::pair<int, int>> labeled = {{0, 1}, {0, 2}, {0, 4}, {0, 5}, {1, 1}, {1, 3}};
  int k = 0;
  for (auto [r, t] : labeled) b.token_labels(r, t) = (k++) % 5;
  return b;
}

TEST(ModelConfig, PresetsAndValidation) {
  const auto tiny = ModelConfig::tiny(1000);
  EXPECT_EQ(tiny.num_layers, 2);
  EXPECT_EQ(tiny.hidden, 128);
  EXPECT_EQ(tiny.heads, 2);
  EXPECT_EQ(tiny.ff_dim, 512);
  EXPECT_EQ(ModelConfig::preset("base", 10), ModelConfig::base(10));
  EXPECT_EQ(ModelConfig::large(10).num_layers, 24);
  EXPECT_THROW(ModelConfig::preset("huge", 10), ConfigError);
  auto bad = tiny;
  bad.hidden = 130;
  bad.heads = 4;
  EXPECT_THROW(init_parameters<float>(bad, 1), ConfigError);
  bad = tiny;
  bad.max_positions = 513;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = tiny;
  bad.dropout_rate = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ModelParameters, TinyShapeTable) {
  const auto c = ModelConfig::tiny(1000);
  const auto params = init_parameters<float>(c, 3);
  const std::int64_t h = 128, f = 512, v = 1000;
  std::map<std::string, Shape> expected = {
      {"embeddings.token", {v, h}},        {"embeddings.position", {512, h}},
      {"embeddings.segment", {2, h}},      {"embeddings.norm.gamma", {h}},
      {"embeddings.norm.beta", {h}},       {"mlm.transform.weight", {h, h}},
      {"mlm.transform.bias", {h}},         {"mlm.norm.gamma", {h}},
      {"mlm.norm.beta", {h}},              {"mlm.output.bias", {v}},
  };
  for (int l = 0; l < 2; ++l) {
    const auto p = "layer." + std::to_string(l) + ".";
    for (std::string proj : {"query", "key", "value", "output"}) {
      expected[p + "attention." + proj + ".weight"] = {h, h};
      if (proj != "key") expected[p + "attention." + proj + ".bias"] = {h};
    }
    expected[p + "attention.norm.gamma"] = {h};
    expected[p + "attention.norm.beta"] = {h};
    expected[p + "ffn.input.weight"] = {h, f};
    expected[p + "ffn.input.bias"] = {f};
    expected[p + "ffn.output.weight"] = {f, h};
    expected[p + "ffn.output.bias"] = {h};
    expected[p + "ffn.norm.gamma"] = {h};
    expected[p + "ffn.norm.beta"] = {h};
  }
  ASSERT_EQ(params.size(), expected.size());
  std::int64_t total = 0;
  params.for_each([&](const std::string& name, const Tensor<float>& t) {
    ASSERT_TRUE(expected.contains(name)) << name;
    EXPECT_EQ(t.shape(), expected[name]) << name;
    total += t.numel();
  });
  EXPECT_EQ(total, parameter_count(c));
}

TEST(ModelParameters, BaseCountMatchesBertBase) {
  // BERT-base minus pooler and key bias: about 110M with a 30522-row vocabulary.
  auto c = ModelConfig::base(30522);
  const auto n = parameter_count(c);
  const std::int64_t body = 12 * (4 * 768 * 768 + 3 * 768 + 2 * 768 + 2 * 768 * 3072 + 3072 + 768 + 2 * 768);
  const std::int64_t emb = (30522 + 512 + 2) * 768 + 2 * 768;
  const std::int64_t mlm = 768 * 768 + 768 + 2 * 768 + 30522;
  EXPECT_EQ(n, body + emb + mlm);
  EXPECT_NEAR(static_cast<double>(n), 110e6, 2e6);
}

TEST(ModelParameters, InitValuesAndDeterminism) {
  const auto c = small_config();
  const auto a = init_parameters<float>(c, 11);
  const auto b = init_parameters<float>(c, 11);
  const auto other = init_parameters<float>(c, 12);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& [name, t] = a.entries()[i];
    const auto& u = b.entries()[i].second;
    EXPECT_EQ(std::memcmp(t.data().data(), u.data().data(), t.numel() * sizeof(float)), 0) << name;
    any_diff |= !(t.data() == other.entries()[i].second.data()).all();
    if (name.ends_with(".gamma")) {
      EXPECT_TRUE((t.data() == 1.0f).all()) << name;
    } else if (t.rank() == 1) {
      EXPECT_TRUE((t.data() == 0.0f).all()) << name;
    }
  }
  EXPECT_TRUE(any_diff);
  const auto& token = a.get("embeddings.token").data();
  const double mean = token.mean();
  const double sd = std::sqrt((token - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 0.003);
  EXPECT_NEAR(sd, 0.02, 0.002);
}

TEST(EncodeSequence, ShapesAndLengthLimit) {
  const auto c = small_config();
  const auto p = init_parameters<float>(c, 1);
  const auto b = make_batch({{kClsId, 6, 7, kSepId}, {kClsId, 6, kSepId}}, 4);
  std::vector<Tensor<float>> probs;
  ForwardOptions<float> opt;
  opt.attention_probs = &probs;
  const auto h = encode_sequence(p, c, b.input_ids, b.attention_mask, b.segment_ids, opt);
  EXPECT_EQ(h.shape(), (Shape{2, 4, 32}));
  EXPECT_EQ(mlm_logits(p, h).shape(), (Shape{2, 4, 32}));
  EXPECT_EQ(classify_logits(p, h).shape(), (Shape{2, 3}));
  EXPECT_EQ(tag_logits(p, h).shape(), (Shape{2, 4, 5}));
  ASSERT_EQ(probs.size(), 2u);
  EXPECT_EQ(probs[0].shape(), (Shape{2, 2, 4, 4}));
  // Rows over real keys sum to one; padded keys get nothing.
  const auto& d = probs[1].data();
  for (std::int64_t row = 0; row < 2 * 2 * 4; ++row) {
    const auto batch = row / 8;
    double s = 0;
    for (int k = 0; k < 4; ++k) {
      if (b.attention_mask(batch, k)) {
        s += d[row * 4 + k];
      } else {
        EXPECT_EQ(d[row * 4 + k], 0.0f);
      }
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const auto long_batch = make_batch({std::vector<std::int32_t>(9, 6)}, 9);
  EXPECT_THROW(encode_sequence(p, c, long_batch.input_ids, long_batch.attention_mask,
                               long_batch.segment_ids),
               SequenceTooLong);
}

TEST(EncodeSequence, PaddingInvariance) {
  auto c = ModelConfig::tiny(64);
  const auto p = init_parameters<float>(c, 5);
  const auto short_b = make_batch({{kClsId, 9, 10, 11, 12, kSepId}, {kClsId, 20, kSepId}}, 6);
  const auto long_b = make_batch({{kClsId, 9, 10, 11, 12, kSepId}, {kClsId, 20, kSepId}}, 22);
  const auto a = encode_sequence(p, c, short_b.input_ids, short_b.attention_mask, short_b.segment_ids);
  const auto z = encode_sequence(p, c, long_b.input_ids, long_b.attention_mask, long_b.segment_ids);
  double worst = 0;
  for (int r = 0; r < 2; ++r) {
    for (int t = 0; t < 6; ++t) {
      if (!short_b.attention_mask(r, t)) continue;
      for (int k = 0; k < 128; ++k) {
        worst = std::max<double>(worst, std::abs(a.data()[(r * 6 + t) * 128 + k] -
                                                 z.data()[(r * 22 + t) * 128 + k]));
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(EncodeSequence, EvalDeterministicTrainSeeded) {
  const auto c = small_config();
  const auto p = init_parameters<float>(c, 2);
  const auto b = make_batch({{kClsId, 6, 7, 8, kSepId}}, 5);
  auto run = [&](bool train, std::uint64_t seed) {
    ForwardOptions<float> o;
    o.train = train;
    o.dropout_seed = seed;
    return encode_sequence(p, c, b.input_ids, b.attention_mask, b.segment_ids, o).data();
  };
  EXPECT_TRUE((run(false, 1) == run(false, 2)).all());
  EXPECT_TRUE((run(true, 3) == run(true, 3)).all());
  EXPECT_FALSE((run(true, 3) == run(true, 4)).all());
  EXPECT_FALSE((run(true, 3) == run(false, 3)).all());
}

TEST(Heads, TiedEmbeddingProbe) {
  const auto c = small_config();
  auto p = init_parameters<double>(c, 3);
  const auto b = make_batch({{kClsId, 6, 7, kSepId}}, 4);
  const auto h = encode_sequence(p, c, b.input_ids, b.attention_mask, b.segment_ids);
  const auto before = mlm_logits(p, h).data();
  // Perturb output row 13 only; the hidden states are reused so only the
  // projection path changes.
  auto& token = p.get("embeddings.token").mutable_data();
  for (int k = 0; k < 32; ++k) token[13 * 32 + k] += 0.5;
  const auto after = mlm_logits(p, h).data();
  for (std::int64_t i = 0; i < before.size(); ++i) {
    if (i % 32 == 13) {
      EXPECT_NE(before[i], after[i]);
    } else {
      EXPECT_EQ(before[i], after[i]);
    }
  }
}

TEST(Heads, EmbeddingGradientFromBothPaths) {
  const auto c = small_config();
  auto p = init_parameters<double>(c, 3);
  p.set_requires_grad(true);
  auto b = make_batch({{kClsId, 6, kMaskId, kSepId}}, 4);
  b.token_labels(0, 2) = 20;
  backward(task_loss(p, c, Task::kMlm, b));
  const auto g = p.get("embeddings.token").grad();
  auto row_norm = [&](int r) { return g.segment(r * 32, 32).matrix().norm(); };
  EXPECT_GT(row_norm(6), 0.0);   // input path only
  EXPECT_GT(row_norm(20), 0.0);  // output path (target row)
  EXPECT_GT(row_norm(25), 0.0);  // output path (softmax competitor)
}

TEST(Heads, ClassifierReadsPositionZeroOnly) {
  const auto c = small_config();
  auto p = init_parameters<double>(c, 4);
  auto h = Tensor<double>::create({2, 4, 32}, init::Normal{0, 1, 9});
  const auto before = classify_logits(p, h).data();
  for (std::int64_t i = 0; i < h.numel(); ++i) {
    if ((i / 32) % 4 != 0) h.mutable_data()[i] += 1.0;
  }
  EXPECT_TRUE((classify_logits(p, h).data() == before).all());

  p.get("classifier.weight").mutable_data().setZero();
  p.get("classifier.bias").mutable_data() << 0.5, -1.0, 2.0;
  const auto l = classify_logits(p, h).data();
  EXPECT_EQ(l[0], 0.5);
  EXPECT_EQ(l[1], -1.0);
  EXPECT_EQ(l[5], 2.0);

  auto headless = small_config();
  headless.num_classes.reset();
  headless.num_tags.reset();
  const auto hp = init_parameters<double>(headless, 1);
  EXPECT_THROW(classify_logits(hp, h), ConfigError);
  EXPECT_THROW(tag_logits(hp, h), ConfigError);
}

TEST(Heads, TaggerIsPositionLocal) {
  const auto c = small_config();
  auto p = init_parameters<double>(c, 4);
  auto h = Tensor<double>::create({1, 4, 32}, init::Normal{0, 1, 9});
  const auto before = tag_logits(p, h).data();
  for (int k = 0; k < 32; ++k) h.mutable_data()[2 * 32 + k] += 1.0;
  const auto after = tag_logits(p, h).data();
  for (std::int64_t i = 0; i < before.size(); ++i) {
    if (i / 5 == 2) {
      EXPECT_NE(before[i], after[i]);
    } else {
      EXPECT_EQ(before[i], after[i]);
    }
  }
  p.get("tagger.weight").mutable_data().setZero();
  p.get("tagger.bias").mutable_data().setConstant(0.25);
  EXPECT_TRUE((tag_logits(p, h).data() == 0.25).all());
}

TEST(Heads, AttachReplacesHead) {
  auto c = small_config();
  c.num_classes.reset();
  auto p = init_parameters<float>(c, 1);
  attach_classifier(p, c, 4, 9);
  EXPECT_EQ(c.num_classes, 4);
  EXPECT_EQ(p.get("classifier.weight").shape(), (Shape{32, 4}));
  attach_classifier(p, c, 2, 9);
  EXPECT_EQ(p.get("classifier.bias").shape(), (Shape{2}));
  EXPECT_EQ(p.size(), init_parameters<float>(c, 1).size());
}

class ModelGradCheck : public ::testing::TestWithParam<Task> {};

TEST_P(ModelGradCheck, EndToEnd) {
  const auto c = small_config();
  const auto params = spread_params<double>(c, 21);
  const auto batch = GetParam() == Task::kTag ? tag_batch() : check_batch();
  ForwardOptions<double> opt;
  opt.train = true;
  opt.dropout_seed = 5;
  const auto result = grad_check(
      [&] { return task_loss(params, c, GetParam(), batch, opt); }, params.tensors(), 1e-3,
      Stencil::kCentralFourth);
  EXPECT_LT(result.max_relative_error, 1e-5)
      << "input " << params.entries()[result.worst_input].first << "[" << result.worst_index
      << "] analytic " << result.worst_analytic << " numeric " << result.worst_numeric;
  EXPECT_EQ(result.elements_checked, static_cast<std::size_t>(parameter_count(c)));
}

INSTANTIATE_TEST_SUITE_P(Tasks, ModelGradCheck,
                         ::testing::Values(Task::kMlm, Task::kClassify, Task::kTag));

}  // namespace
}  // namespace albt
