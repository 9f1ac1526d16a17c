#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "albt/checkpoint.h"
#include "albt/error.h"
#include "albt/trainer.h"

namespace albt {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.num_layers = 1;
  c.hidden = 16;
  c.heads = 2;
  c.ff_dim = 32;
  c.vocab_size = 24;
  c.max_positions = 16;
  c.num_classes = 3;
  c.num_tags = 4;
  return c;
}

std::vector<Example> random_examples(std::size_t n, const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(4, 12);
  std::uniform_int_distribution<int> tok(kNumSpecialTokens, c.vocab_size - 1);
  std::uniform_int_distribution<int> cls(0, *c.num_classes - 1);
  std::uniform_int_distribution<int> tag(0, *c.num_tags - 1);
  std::bernoulli_distribution masked(0.3);
  std::vector<Example> out(n);
  for (auto& e : out) {
    const int t = len(rng);
    e.ids.push_back(kClsId);
    e.token_labels.push_back(kNoLabel);
    for (int i = 1; i + 1 < t; ++i) {
      e.ids.push_back(tok(rng));
      e.token_labels.push_back(masked(rng) ? tok(rng) : kNoLabel);
    }
    e.ids.push_back(kSepId);
    e.token_labels.push_back(kNoLabel);
    e.token_labels[1] = tok(rng);
    e.sequence_label = cls(rng);
  }
  return out;
}

std::vector<Example> as_tagging(std::vector<Example> examples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& e : examples) {
    for (std::size_t i = 1; i + 1 < e.ids.size(); ++i) e.token_labels[i] = static_cast<int>(rng() % 4);
  }
  return examples;
}

template <typename S>
ModelParameters<S> single(const std::string& name, const Shape& shape, double value) {
  ModelParameters<S> p;
  p.add(name, Tensor<S>::constant(shape, value));
  p.set_requires_grad(true);
  return p;
}

void set_grad(ModelParameters<double>& p, double g) {
  for (auto& [name, t] : p.entries()) t.node()->grad = Array<double>::Constant(t.numel(), g);
}

TEST(LearningRate, SpecExamples) {
  TrainConfig c;
  c.peak_lr = 5e-5;
  c.total_steps = 1000;
  c.warmup_fraction = 0.1;
  EXPECT_DOUBLE_EQ(lr_at_step(c, 100), 5e-5);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 550), 2.5e-5);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 1000), 0.0);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 1001), 0.0);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 50), 2.5e-5);
}

TEST(LearningRate, PiecewiseLinearSinglePeak) {
  TrainConfig c;
  c.total_steps = 200;
  c.warmup_fraction = 0.25;
  int peaks = 0;
  for (int s = 1; s < c.total_steps; ++s) {
    const double prev = lr_at_step(c, s - 1), cur = lr_at_step(c, s), next = lr_at_step(c, s + 1);
    if (cur > prev && cur > next) ++peaks;
    EXPECT_NEAR(cur - prev, next - cur, 1e-18 + (s == 50 ? c.peak_lr : 0.0));
  }
  EXPECT_EQ(peaks, 1);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 50), c.peak_lr);
}

TEST(LearningRate, ZeroWarmup) {
  TrainConfig c;
  c.warmup_fraction = 0.0;
  c.total_steps = 10;
  EXPECT_DOUBLE_EQ(lr_at_step(c, 0), c.peak_lr);
  EXPECT_DOUBLE_EQ(lr_at_step(c, 5), c.peak_lr / 2);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.warmup_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.total_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.accumulation = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Adam, FirstStepClosedForm) {
  auto p = single<double>("w", {1, 1}, 1.0);
  auto state = make_optimizer_state(p);
  set_grad(p, 1.0);
  adam_update(p, state, 0.1, {});
  EXPECT_EQ(state.step, 1);
  EXPECT_NEAR(state.m[0][0], 0.1, 1e-15);
  EXPECT_NEAR(state.v[0][0], 0.001, 1e-15);
  EXPECT_NEAR(p.get("w").data()[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientIsIdentity) {
  auto p = single<double>("w", {2, 3}, 0.7);
  auto state = make_optimizer_state(p);
  for (int i = 0; i < 3; ++i) {
    set_grad(p, 0.0);
    adam_update(p, state, 0.1, {});
  }
  EXPECT_TRUE((p.get("w").data() == 0.7).all());
}

TEST(Adam, DecoupledDecayOnMatricesOnly) {
  ModelParameters<double> p;
  p.add("matrix", Tensor<double>::constant({1, 1}, 1.0));
  p.add("bias", Tensor<double>::constant({1}, 1.0));
  p.set_requires_grad(true);
  auto state = make_optimizer_state(p);
  set_grad(p, 0.0);
  AdamHyper h;
  h.weight_decay = 0.01;
  adam_update(p, state, 0.1, h);
  EXPECT_NEAR(p.get("matrix").data()[0], 0.999, 1e-15);
  EXPECT_EQ(p.get("bias").data()[0], 1.0);
}

TEST(Adam, NonFiniteGradientAbortsBeforeUpdate) {
  ModelParameters<double> p;
  p.add("a", Tensor<double>::constant({2, 2}, 1.0));
  p.add("b", Tensor<double>::constant({2}, 1.0));
  p.set_requires_grad(true);
  auto state = make_optimizer_state(p);
  set_grad(p, 0.5);
  p.get("b").node()->grad[1] = std::nan("");
  EXPECT_THROW(adam_update(p, state, 0.1, {}), NumericError);
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE((p.get("a").data() == 1.0).all());
  EXPECT_TRUE((state.m[0] == 0.0).all());
}

TEST(ClipGradNorm, ScalesToMaxNorm) {
  auto p = single<double>("w", {1, 2}, 0.0);
  p.get("w").node()->grad = Array<double>(2);
  p.get("w").node()->grad << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(p, 1.0), 5.0);
  EXPECT_NEAR(p.get("w").grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(p.get("w").grad()[1], 0.8, 1e-15);
  EXPECT_NEAR(clip_grad_norm(p, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(p.get("w").grad()[1], 0.8, 1e-15);
}

TEST(BatchStreamTest, SkipMatchesConsumption) {
  const auto c = small_config();
  const auto examples = random_examples(10, c, 1);
  BatchStream a(examples, 3, 7), b(examples, 3, 7);
  for (int i = 0; i < 9; ++i) a.next();
  b.skip(9);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.next().input_ids.matrix(), b.next().input_ids.matrix());
}

TEST(BatchStreamTest, EachEpochCoversAllExamples) {
  const auto c = small_config();
  const auto examples = random_examples(10, c, 2);
  BatchStream s(examples, 4, 3);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::int64_t rows = 0;
    for (int i = 0; i < 3; ++i) rows += s.next().rows();
    EXPECT_EQ(rows, 10);
  }
}

// k micro-batches with accumulation must produce the same step as one batch
// holding all of them.
TEST(Accumulation, MatchesSingleLargeBatch) {
  for (Task task : {Task::kMlm, Task::kClassify, Task::kTag}) {
    auto c = small_config();
    c.dropout_rate = 0.0;
    auto examples = random_examples(16, c, 11);
    if (task == Task::kTag) examples = as_tagging(examples, 12);
    TrainConfig t;
    t.peak_lr = 5e-5;
    t.total_steps = 10;
    t.warmup_fraction = 0.1;

    auto accumulated = init_parameters<double>(c, 3);
    auto large = accumulated.cast<double>();
    auto sa = make_optimizer_state(accumulated);
    auto sl = make_optimizer_state(large);
    const auto micro = make_batches(examples, 4);
    const auto whole = make_batches(examples, 16);
    ASSERT_EQ(micro.size(), 4u);
    for (int step = 0; step < 3; ++step) {
      const auto ra = train_step(accumulated, c, task, std::span<const Batch>(micro), sa, t, 1);
      const auto rl = train_step(large, c, task, std::span<const Batch>(whole), sl, t, 1);
      EXPECT_NEAR(ra.loss, rl.loss, 1e-12);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < accumulated.size(); ++i) {
      worst = std::max(worst, (accumulated.entries()[i].second.data() - large.entries()[i].second.data())
                                  .abs()
                                  .maxCoeff());
    }
    EXPECT_LT(worst, 1e-6);
  }
}

TEST(TrainStep, NonFiniteLossLeavesParametersUntouched) {
  auto c = small_config();
  auto params = init_parameters<float>(c, 1);
  params.get("embeddings.norm.beta").mutable_data()[0] = std::nanf("");
  const auto before = params.cast<float>();
  auto state = make_optimizer_state(params);
  const auto batches = make_batches(random_examples(4, c, 2), 4);
  TrainConfig t;
  EXPECT_THROW(train_step(params, c, Task::kClassify, std::span<const Batch>(batches), state, t, 0),
               NumericError);
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE((params.get("layer.0.ffn.input.weight").data() ==
               before.get("layer.0.ffn.input.weight").data())
                  .all());
}

TEST(EarlyStoppingTest, SpecTrace) {
  EarlyStopping s(3, 1e-4);
  const std::vector<double> trace{2.0, 1.5, 1.6, 1.7, 1.8};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_FALSE(s.should_stop()) << i;
    s.observe(trace[i]);
  }
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_index(), 1);
  EXPECT_DOUBLE_EQ(s.best_loss(), 1.5);
}

TEST(EarlyStoppingTest, MonotoneNeverStops) {
  EarlyStopping s(3, 1e-4);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(s.observe(10.0 - 0.01 * i));
    EXPECT_FALSE(s.should_stop());
  }
}

TEST(EarlyStoppingTest, PatienceOneAndThreshold) {
  EarlyStopping s(1, 1e-4);
  s.observe(1.0);
  EXPECT_FALSE(s.observe(1.0 - 5e-5));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_index(), 0);

  EarlyStopping r(2, 1e-4);
  r.observe(1.0);
  r.observe(1.1);
  r.observe(0.5);
  EXPECT_FALSE(r.should_stop());
  r.observe(std::nan(""));
  EXPECT_FALSE(r.should_stop());
  r.observe(0.6);
  EXPECT_TRUE(r.should_stop());
  EXPECT_EQ(r.best_index(), 2);
}

TEST(Finetune, TraceReturnsSecondCheckpoint) {
  const auto c = small_config();
  const auto examples = random_examples(8, c, 4);
  TrainConfig t;
  t.total_steps = 100;
  t.eval_every = 1;
  t.patience = 3;
  t.micro_batch = 4;
  t.accumulation = 1;
  t.peak_lr = 1e-3;
  const std::vector<double> trace{2.0, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0};
  std::vector<ModelParameters<float>> snapshots;
  ValidationFn fn = [&](const ModelParameters<float>& p, std::int64_t) {
    snapshots.push_back(p.cast<float>());
    return trace.at(snapshots.size() - 1);
  };
  const auto r = finetune(init_parameters<float>(c, 5), c, Task::kClassify, examples, fn, t);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.history.size(), 5u);
  EXPECT_EQ(r.steps_run, 5);
  EXPECT_EQ(r.best_step, 2);
  EXPECT_DOUBLE_EQ(r.best_loss, 1.5);
  for (std::size_t i = 0; i < r.best.size(); ++i) {
    EXPECT_TRUE((r.best.entries()[i].second.data() == snapshots[1].entries()[i].second.data()).all());
  }
  EXPECT_FALSE((snapshots[1].get("classifier.weight").data() ==
                snapshots[4].get("classifier.weight").data())
                   .all());
}

TEST(Finetune, ImprovingRunsToTotalSteps) {
  const auto c = small_config();
  const auto examples = random_examples(8, c, 4);
  TrainConfig t;
  t.total_steps = 7;
  t.eval_every = 3;
  t.micro_batch = 4;
  t.accumulation = 1;
  double next = 5.0;
  ValidationFn fn = [&](const ModelParameters<float>&, std::int64_t) { return next -= 1.0; };
  const auto r = finetune(init_parameters<float>(c, 5), c, Task::kTag, as_tagging(examples, 1), fn, t);
  EXPECT_FALSE(r.early_stopped);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.history[0].step, 3);
  EXPECT_EQ(r.history[1].step, 6);
  EXPECT_EQ(r.history[2].step, 7);
  EXPECT_EQ(r.best_step, 7);
  EXPECT_EQ(r.log.size(), 7u);
}

TEST(Finetune, RejectsEmptyValidationSetAndMissingHead) {
  auto c = small_config();
  const auto examples = random_examples(4, c, 4);
  const auto params = init_parameters<float>(c, 5);
  TrainConfig t;
  EXPECT_THROW(finetune(params.cast<float>(), c, Task::kClassify, examples, std::span<const Example>(), t),
               ConfigError);
  auto headless = c;
  headless.num_classes.reset();
  EXPECT_THROW(finetune(init_parameters<float>(headless, 5), headless, Task::kClassify, examples,
                        std::span<const Example>(examples), t),
               ConfigError);
}

TEST(Finetune, ValidationLossFromExamples) {
  const auto c = small_config();
  const auto train = random_examples(8, c, 4);
  const auto val = random_examples(4, c, 9);
  TrainConfig t;
  t.total_steps = 4;
  t.eval_every = 2;
  t.micro_batch = 4;
  t.accumulation = 2;
  const auto r = finetune(init_parameters<float>(c, 5), c, Task::kClassify, train,
                          std::span<const Example>(val), t);
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_NEAR(r.history[0].val_loss, std::log(3.0), 0.2);
  EXPECT_DOUBLE_EQ(evaluate_loss(r.best, c, Task::kClassify, val, t.micro_batch), r.best_loss);
}

TrainConfig pretrain_config() {
  TrainConfig t;
  t.total_steps = 6;
  t.micro_batch = 3;
  t.accumulation = 2;
  t.peak_lr = 1e-3;
  return t;
}

TEST(Pretrain, DeterministicLogs) {
  const auto c = small_config();
  const auto examples = random_examples(10, c, 8);
  const auto t = pretrain_config();
  auto run = [&] {
    auto p = init_parameters<float>(c, 2);
    auto s = make_optimizer_state(p);
    return pretrain(p, c, examples, t, s);
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].step, static_cast<std::int64_t>(i) + 1);
    EXPECT_EQ(std::memcmp(&a[i].loss, &b[i].loss, sizeof(double)), 0);
    EXPECT_EQ(a[i].lr, lr_at_step(t, a[i].step));
  }
  EXPECT_NEAR(a[0].loss, std::log(static_cast<double>(c.vocab_size)), 0.2);
}

TEST(Pretrain, ResumeFromCheckpointContinuesExactly) {
  const auto c = small_config();
  const auto examples = random_examples(10, c, 8);
  auto full_t = pretrain_config();
  auto p_full = init_parameters<float>(c, 2);
  auto s_full = make_optimizer_state(p_full);
  const auto full = pretrain(p_full, c, examples, full_t, s_full);

  auto p = init_parameters<float>(c, 2);
  auto s = make_optimizer_state(p);
  std::string saved;
  TrainHooks hooks;
  int calls = 0;
  hooks.on_checkpoint = [&](const ModelParameters<float>& params, const OptimizerState<float>& st) {
    ++calls;
    if (st.step == 3) saved = serialize_checkpoint({c, params.cast<float>(), st, {}});
  };
  auto t = full_t;
  t.checkpoint_every = 3;
  pretrain(p, c, examples, t, s, hooks);
  EXPECT_EQ(calls, 2);

  auto ck = parse_checkpoint(saved);
  ASSERT_TRUE(ck.optimizer.has_value());
  const auto tail = pretrain(ck.params, c, examples, full_t, *ck.optimizer);
  ASSERT_EQ(tail.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(tail[i].step, full[i + 3].step);
    EXPECT_EQ(tail[i].loss, full[i + 3].loss);
  }
  for (std::size_t i = 0; i < p_full.size(); ++i) {
    EXPECT_TRUE((ck.params.entries()[i].second.data() == p_full.entries()[i].second.data()).all());
  }
}

TEST(Pretrain, FailureHookSeesLastGoodParameters) {
  const auto c = small_config();
  const auto examples = random_examples(6, c, 8);
  auto p = init_parameters<float>(c, 2);
  p.get("mlm.output.bias").mutable_data()[3] = std::numeric_limits<float>::infinity();
  auto s = make_optimizer_state(p);
  bool failed = false;
  TrainHooks hooks;
  hooks.on_failure = [&](const ModelParameters<float>& params, const OptimizerState<float>& st) {
    failed = true;
    EXPECT_EQ(st.step, 0);
    EXPECT_TRUE(std::isinf(params.get("mlm.output.bias").data()[3]));
  };
  EXPECT_THROW(pretrain(p, c, examples, pretrain_config(), s, hooks), NumericError);
  EXPECT_TRUE(failed);
}

Checkpoint sample_checkpoint(bool with_optimizer) {
  auto c = small_config();
  Checkpoint ck{c, init_parameters<float>(c, 6), std::nullopt, {}};
  if (with_optimizer) {
    auto s = make_optimizer_state(ck.params);
    s.step = 17;
    for (auto& m : s.m) m.setConstant(0.25f);
    for (auto& v : s.v) v.setConstant(1e-7f);
    ck.optimizer = s;
  }
  ck.metadata["labels"] = join_list({"class0", "class 1", "x=y"});
  ck.metadata["note"] = "two\nlines \\ slash";
  return ck;
}

TEST(CheckpointTest, RoundTripIsBitwise) {
  for (bool with_optimizer : {false, true}) {
    const auto ck = sample_checkpoint(with_optimizer);
    const auto bytes = serialize_checkpoint(ck);
    ASSERT_EQ(bytes.substr(0, 4), "ALBT");
    const auto back = parse_checkpoint(bytes);
    EXPECT_EQ(back.config, ck.config);
    EXPECT_EQ(back.metadata, ck.metadata);
    EXPECT_EQ(split_list(back.metadata.at("labels")), (std::vector<std::string>{"class0", "class 1", "x=y"}));
    ASSERT_EQ(back.params.size(), ck.params.size());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      const auto& a = ck.params.entries()[i].second.data();
      const auto& b = back.params.entries()[i].second.data();
      ASSERT_EQ(a.size(), b.size());
      EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)), 0);
    }
    EXPECT_EQ(back.optimizer.has_value(), with_optimizer);
    if (with_optimizer) {
      EXPECT_EQ(back.optimizer->step, 17);
      EXPECT_TRUE((back.optimizer->v[3] == 1e-7f).all());
    }
    EXPECT_EQ(serialize_checkpoint(back), bytes);
  }
}

TEST(CheckpointTest, FileSaveLoadSave) {
  const auto dir = std::filesystem::temp_directory_path() / "albt_ck_test";
  std::filesystem::create_directories(dir);
  const auto ck = sample_checkpoint(true);
  save_checkpoint(dir / "a.ck", ck);
  save_checkpoint(dir / "b.ck", load_checkpoint(dir / "a.ck"));
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "b.ck")), serialize_checkpoint(ck));
  EXPECT_THROW(load_checkpoint(dir / "missing.ck"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(CheckpointTest, DropoutRateRoundTripsExactly) {
  auto ck = sample_checkpoint(false);
  ck.config.dropout_rate = std::nextafter(0.1, 1.0);
  EXPECT_EQ(parse_checkpoint(serialize_checkpoint(ck)).config.dropout_rate, ck.config.dropout_rate);
}

TEST(CheckpointTest, BadMagicAndVersion) {
  auto bytes = serialize_checkpoint(sample_checkpoint(false));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(parse_checkpoint(bad), FormatError);
  EXPECT_THROW(parse_checkpoint(""), FormatError);
}

TEST(CheckpointTest, TruncationIsDetected) {
  const auto bytes = serialize_checkpoint(sample_checkpoint(true));
  for (std::size_t cut : {std::size_t{3}, std::size_t{11}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 1}) {
    EXPECT_THROW(parse_checkpoint(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(parse_checkpoint(bytes + "x"), FormatError);
}

TEST(CheckpointTest, HeaderInconsistencies) {
  const auto bytes = serialize_checkpoint(sample_checkpoint(false));
  auto edit = [&](const std::string& from, const std::string& to) {
    auto out = bytes;
    const auto pos = out.find(from);
    EXPECT_NE(pos, std::string::npos);
    out.replace(pos, from.size(), to);
    return out;
  };
  // Same-length edits keep the header length field valid.
  EXPECT_THROW(parse_checkpoint(edit("model.hidden=16", "model.hidden=17")), FormatError);
  EXPECT_THROW(parse_checkpoint(edit("model.heads=2", "model.hexds=2")), FormatError);
  EXPECT_THROW(parse_checkpoint(edit(" f32 ", " f64 ")), FormatError);
  EXPECT_THROW(parse_checkpoint(edit("tensor=embeddings.token", "tensor=embeddings.tokem")), FormatError);
}

TEST(CheckpointTest, MissingOptimizerStateStartsFresh) {
  const auto ck = parse_checkpoint(serialize_checkpoint(sample_checkpoint(false)));
  ASSERT_FALSE(ck.optimizer.has_value());
  TrainConfig t;
  t.total_steps = 2;
  t.micro_batch = 4;
  t.accumulation = 1;
  t.warmup_fraction = 0.5;
  const auto examples = random_examples(4, ck.config, 3);
  ValidationFn fn = [](const ModelParameters<float>&, std::int64_t) { return 1.0; };
  const auto r = finetune(ck.params.cast<float>(), ck.config, Task::kClassify, examples, fn, t, ck.optimizer);
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_EQ(r.log[0].step, 1);
  EXPECT_DOUBLE_EQ(r.log[0].lr, t.peak_lr);
}

}  // namespace
}  // namespace albt
