#include "albt/trainer.h"

#include <cmath>
#include <limits>

#include "albt/error.h"
#include "albt/seed.h"

namespace albt {

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kDropoutStream = 0xD409;

AdamHyper hyper_of(const TrainConfig& c) {
  return {c.beta1, c.beta2, c.adam_eps, c.weight_decay};
}

std::vector<Example> copy_examples(std::span<const Example> examples) {
  return {examples.begin(), examples.end()};
}

// Shared step loop for pretraining and fine-tuning. `after_step` returns
// false to stop early.
template <typename AfterStep>
std::vector<LossRecord> run_steps(ModelParameters<float>& params, const ModelConfig& config,
                                  Task task, std::span<const Example> examples,
                                  const TrainConfig& train, OptimizerState<float>& state,
                                  const TrainHooks& hooks, AfterStep&& after_step) {
  train.validate();
  if (examples.empty()) throw ConfigError("training set is empty");
  if (state.step < 0 || state.step > train.total_steps) {
    throw ConfigError("optimizer step is outside [0, total_steps]");
  }
  BatchStream stream(copy_examples(examples), train.micro_batch,
                     derive_seed(train.seed, kDataStream));
  stream.skip(static_cast<std::size_t>(state.step) * train.accumulation);
  const auto dropout_base = derive_seed(train.seed, kDropoutStream);

  std::vector<LossRecord> log;
  std::vector<Batch> micro(train.accumulation);
  while (state.step < train.total_steps) {
    const auto step = state.step + 1;
    for (auto& b : micro) b = stream.next();
    StepResult r;
    try {
      r = train_step(params, config, task, std::span<const Batch>(micro), state, train,
                     derive_seed(dropout_base, static_cast<std::uint64_t>(step)));
    } catch (const NumericError&) {
      if (hooks.on_failure) hooks.on_failure(params, state);
      throw;
    }
    log.push_back({step, r.lr, r.loss});
    if (hooks.on_step) hooks.on_step(log.back());
    const bool last = step == train.total_steps;
    if (hooks.on_checkpoint &&
        (last || (train.checkpoint_every > 0 && step % train.checkpoint_every == 0))) {
      hooks.on_checkpoint(params, state);
    }
    if (!after_step(step, last)) break;
  }
  return log;
}

}  // namespace

BatchStream::BatchStream(std::vector<Example> examples, std::size_t micro_batch,
                         std::uint64_t seed, bool shuffle)
    : examples_(std::move(examples)), micro_batch_(micro_batch), seed_(seed), shuffle_(shuffle) {
  if (examples_.empty()) throw ConfigError("batch stream needs at least one example");
  if (micro_batch_ == 0) throw ConfigError("micro_batch must be at least 1");
  refill();
}

void BatchStream::refill() {
  std::optional<std::uint64_t> shuffle_seed;
  if (shuffle_) shuffle_seed = derive_seed(seed_, epoch_);
  batches_ = make_batches(examples_, micro_batch_, shuffle_seed);
  cursor_ = 0;
  ++epoch_;
}

const Batch& BatchStream::next() {
  if (cursor_ == batches_.size()) refill();
  return batches_[cursor_++];
}

void BatchStream::skip(std::size_t count) {
  while (count > 0) {
    const auto left = batches_.size() - cursor_;
    if (count < left) {
      cursor_ += count;
      return;
    }
    count -= left;
    refill();
  }
}

template <typename S>
StepResult train_step(ModelParameters<S>& params, const ModelConfig& config, Task task,
                      std::span<const Batch> micro_batches, OptimizerState<S>& state,
                      const TrainConfig& train, std::uint64_t dropout_seed) {
  if (micro_batches.empty()) throw ConfigError("train_step needs at least one micro-batch");
  std::int64_t total = 0;
  for (const auto& b : micro_batches) total += labeled_count(task, b);

  params.set_requires_grad(true);
  params.zero_grad();
  double loss = 0.0;
  for (std::size_t i = 0; i < micro_batches.size(); ++i) {
    const auto n = labeled_count(task, micro_batches[i]);
    if (n == 0) continue;
    ForwardOptions<S> options;
    options.train = true;
    options.dropout_seed = derive_seed(dropout_seed, i);
    const auto weight = static_cast<double>(n) / static_cast<double>(total);
    const auto part = scale(task_loss(params, config, task, micro_batches[i], options), weight);
    loss += static_cast<double>(part.item());
    backward(part);
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");

  StepResult r;
  r.loss = loss;
  r.grad_norm = clip_grad_norm(params, train.max_grad_norm);
  r.lr = lr_at_step(train, state.step + 1);
  adam_update(params, state, r.lr, hyper_of(train));
  return r;
}

template StepResult train_step(ModelParameters<float>&, const ModelConfig&, Task,
                               std::span<const Batch>, OptimizerState<float>&, const TrainConfig&,
                               std::uint64_t);
template StepResult train_step(ModelParameters<double>&, const ModelConfig&, Task,
                               std::span<const Batch>, OptimizerState<double>&, const TrainConfig&,
                               std::uint64_t);

double evaluate_loss(const ModelParameters<float>& params, const ModelConfig& config, Task task,
                     std::span<const Example> examples, std::size_t batch_size) {
  NoGradGuard guard;
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& batch : make_batches(examples, batch_size)) {
    const auto n = labeled_count(task, batch);
    if (n == 0) continue;
    sum += static_cast<double>(task_loss(params, config, task, batch).item()) * static_cast<double>(n);
    count += n;
  }
  if (count == 0) throw ConfigError("no labeled targets to evaluate");
  return sum / static_cast<double>(count);
}

std::vector<LossRecord> pretrain(ModelParameters<float>& params, const ModelConfig& config,
                                 std::span<const Example> examples, const TrainConfig& train,
                                 OptimizerState<float>& state, const TrainHooks& hooks) {
  return run_steps(params, config, Task::kMlm, examples, train, state, hooks,
                   [](std::int64_t, bool) { return true; });
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ConfigError("patience must be at least 1");
}

bool EarlyStopping::observe(double loss) {
  const int index = count_++;
  if (best_index_ < 0 ? std::isfinite(loss) : loss < best_ - min_delta_) {
    best_ = loss;
    best_index_ = index;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

FinetuneResult finetune(ModelParameters<float> params, const ModelConfig& config, Task task,
                        std::span<const Example> train_set, const ValidationFn& validate,
                        const TrainConfig& train, std::optional<OptimizerState<float>> state,
                        const TrainHooks& hooks) {
  if (task == Task::kMlm) throw ConfigError("finetune expects a classification or tagging task");
  if (task == Task::kClassify && !config.num_classes) throw ConfigError("model has no classifier head");
  if (task == Task::kTag && !config.num_tags) throw ConfigError("model has no tagging head");
  if (!validate) throw ConfigError("finetune needs a validation function");
  auto opt = state ? std::move(*state) : make_optimizer_state(params);

  FinetuneResult result;
  EarlyStopping stopper(train.patience, train.min_delta);
  result.log = run_steps(params, config, task, train_set, train, opt, hooks,
                         [&](std::int64_t step, bool last) {
                           result.steps_run = step;
                           if (!last && step % train.eval_every != 0) return true;
                           const double loss = validate(params, step);
                           result.history.push_back({step, loss});
                           if (stopper.observe(loss)) {
                             result.best = params.cast<float>();
                             result.best_step = step;
                             result.best_loss = loss;
                           }
                           if (stopper.should_stop() && !last) {
                             result.early_stopped = true;
                             return false;
                           }
                           return true;
                         });
  if (stopper.best_index() < 0) {
    result.best = params.cast<float>();
    result.best_step = result.steps_run;
    result.best_loss = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

FinetuneResult finetune(ModelParameters<float> params, const ModelConfig& config, Task task,
                        std::span<const Example> train_set, std::span<const Example> val_set,
                        const TrainConfig& train, std::optional<OptimizerState<float>> state,
                        const TrainHooks& hooks) {
  if (val_set.empty()) throw ConfigError("validation set is empty");
  ValidationFn fn = [&](const ModelParameters<float>& p, std::int64_t) {
    return evaluate_loss(p, config, task, val_set, train.micro_batch);
  };
  return finetune(std::move(params), config, task, train_set, fn, train, std::move(state), hooks);
}

}  // namespace albt
