#pragma once

#include <cstdint>
#include <vector>

#include "albt/model.h"

namespace albt {

struct TrainConfig {
  double peak_lr = 5e-5;
  std::int64_t total_steps = 1000;
  double warmup_fraction = 0.1;
  std::size_t micro_batch = 8;
  std::size_t accumulation = 4;
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 42;
  std::int64_t eval_every = 50;
  int patience = 3;
  double min_delta = 1e-4;
  // 0 disables periodic checkpoints.
  std::int64_t checkpoint_every = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// Linear ramp from 0 to peak_lr over warmup_fraction * total_steps, then
// linear decay to 0 at total_steps. Steps outside [0, total_steps] give 0.
double lr_at_step(const TrainConfig& config, std::int64_t step);

template <typename Scalar>
struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Array<Scalar>> m;
  std::vector<Array<Scalar>> v;
};

// Zero moments shaped like `params`, t = 0.
template <typename Scalar>
OptimizerState<Scalar> make_optimizer_state(const ModelParameters<Scalar>& params);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Bias-corrected Adam on the accumulated gradients, with decoupled weight
// decay on tensors of rank >= 2:
//   w -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
// Increments state.step. A non-finite gradient throws NumericError before
// anything is modified.
template <typename Scalar>
void adam_update(ModelParameters<Scalar>& params, OptimizerState<Scalar>& state, double lr,
                 const AdamHyper& hyper);

// Scales all gradients so their global L2 norm is at most max_norm. Returns
// the norm before clipping. max_norm <= 0 disables clipping.
template <typename Scalar>
double clip_grad_norm(ModelParameters<Scalar>& params, double max_norm);

}  // namespace albt
