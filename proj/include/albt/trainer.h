#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "albt/corpus.h"
#include "albt/model.h"
#include "albt/optim.h"

namespace albt {

struct LossRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

// Endless sequence of micro-batches. Each epoch is a fresh shuffle seeded by
// derive_seed(seed, epoch).
class BatchStream {
 public:
  BatchStream(std::vector<Example> examples, std::size_t micro_batch, std::uint64_t seed,
              bool shuffle = true);
  const Batch& next();
  void skip(std::size_t count);

 private:
  void refill();

  std::vector<Example> examples_;
  std::size_t micro_batch_;
  std::uint64_t seed_;
  bool shuffle_;
  std::uint64_t epoch_ = 0;
  std::vector<Batch> batches_;
  std::size_t cursor_ = 0;
};

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

// One optimizer step: the micro-batch losses are combined with weights
// n_i / sum(n) (n = labeled targets), so the step sees the mean loss over all
// targets exactly as one large batch would. Then clip, then Adam at
// lr_at_step(state.step + 1). Micro-batch i uses dropout seed
// derive_seed(dropout_seed, i). Throws NumericError on a non-finite loss or
// gradient, leaving params and state untouched.
template <typename Scalar>
StepResult train_step(ModelParameters<Scalar>& params, const ModelConfig& config, Task task,
                      std::span<const Batch> micro_batches, OptimizerState<Scalar>& state,
                      const TrainConfig& train, std::uint64_t dropout_seed);

// Mean loss over all labeled targets of `examples`, eval mode.
double evaluate_loss(const ModelParameters<float>& params, const ModelConfig& config, Task task,
                     std::span<const Example> examples, std::size_t batch_size = 16);

struct TrainHooks {
  // After every step.
  std::function<void(const LossRecord&)> on_step;
  // Every checkpoint_every steps and after the last step.
  std::function<void(const ModelParameters<float>&, const OptimizerState<float>&)> on_checkpoint;
  // Before a NumericError propagates; receives the last good parameters.
  std::function<void(const ModelParameters<float>&, const OptimizerState<float>&)> on_failure;
};

// MLM pretraining from state.step + 1 to total_steps. Resuming with a saved
// state replays the same data order.
std::vector<LossRecord> pretrain(ModelParameters<float>& params, const ModelConfig& config,
                                 std::span<const Example> examples, const TrainConfig& train,
                                 OptimizerState<float>& state, const TrainHooks& hooks = {});

class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta);

  // Returns true when `loss` is a new best.
  bool observe(double loss);
  bool should_stop() const { return stale_ >= patience_; }
  double best_loss() const { return best_; }
  // 0-based index of the best evaluation, -1 before the first.
  int best_index() const { return best_index_; }
  int evaluations() const { return count_; }

 private:
  int patience_;
  double min_delta_;
  double best_;
  int best_index_ = -1;
  int count_ = 0;
  int stale_ = 0;
};

struct EvalRecord {
  std::int64_t step = 0;
  double val_loss = 0.0;
};

struct FinetuneResult {
  ModelParameters<float> best;
  std::int64_t best_step = 0;
  double best_loss = 0.0;
  std::vector<EvalRecord> history;
  std::vector<LossRecord> log;
  bool early_stopped = false;
  std::int64_t steps_run = 0;
};

using ValidationFn = std::function<double(const ModelParameters<float>&, std::int64_t step)>;

// Validation runs every eval_every steps and after the last step. Training
// stops after `patience` consecutive evaluations that fail to beat the best
// by more than min_delta. The best parameters are returned. A missing
// optimizer state starts fresh at t = 0.
FinetuneResult finetune(ModelParameters<float> params, const ModelConfig& config, Task task,
                        std::span<const Example> train_set, const ValidationFn& validate,
                        const TrainConfig& train,
                        std::optional<OptimizerState<float>> state = std::nullopt,
                        const TrainHooks& hooks = {});

// Validates with evaluate_loss on `val_set`; ConfigError if it is empty.
FinetuneResult finetune(ModelParameters<float> params, const ModelConfig& config, Task task,
                        std::span<const Example> train_set, std::span<const Example> val_set,
                        const TrainConfig& train,
                        std::optional<OptimizerState<float>> state = std::nullopt,
                        const TrainHooks& hooks = {});

}  // namespace albt
