#include "albt/optim.h"

#include <cmath>

#include <fmt/format.h>

#include "albt/error.h"

namespace albt {

void TrainConfig::validate() const {
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("warmup_fraction must be in [0, 1)");
  }
  if (total_steps < 1) throw ConfigError("total_steps must be at least 1");
  if (accumulation < 1) throw ConfigError("accumulation must be at least 1");
  if (micro_batch < 1) throw ConfigError("micro_batch must be at least 1");
  if (!(peak_lr >= 0.0) || !std::isfinite(peak_lr)) throw ConfigError("peak_lr must be finite and non-negative");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

double lr_at_step(const TrainConfig& c, std::int64_t step) {
  if (step < 0 || step > c.total_steps) return 0.0;
  const double total = static_cast<double>(c.total_steps);
  const double warmup = c.warmup_fraction * total;
  const double s = static_cast<double>(step);
  if (s < warmup) return c.peak_lr * s / warmup;
  return c.peak_lr * (total - s) / (total - warmup);
}

template <typename S>
OptimizerState<S> make_optimizer_state(const ModelParameters<S>& params) {
  OptimizerState<S> state;
  for (const auto& [name, t] : params.entries()) {
    state.m.push_back(Array<S>::Zero(t.numel()));
    state.v.push_back(Array<S>::Zero(t.numel()));
  }
  return state;
}

template <typename S>
void adam_update(ModelParameters<S>& params, OptimizerState<S>& state, double lr,
                 const AdamHyper& hyper) {
  auto& entries = params.entries();
  if (state.m.size() != entries.size() || state.v.size() != entries.size()) {
    throw ShapeMismatch("optimizer state does not match the parameter list");
  }
  std::vector<Array<S>> grads;
  grads.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, t] = entries[i];
    if (state.m[i].size() != t.numel()) throw ShapeMismatch("optimizer moment shape for " + name);
    grads.push_back(t.grad());
    if (!grads.back().allFinite()) throw NumericError("non-finite gradient in " + name);
  }
  const auto t = ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  const S b1 = static_cast<S>(hyper.beta1);
  const S b2 = static_cast<S>(hyper.beta2);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& tensor = entries[i].second;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    auto& w = tensor.mutable_data();
    const Array<S> step = (m / static_cast<S>(c1)) /
                          ((v / static_cast<S>(c2)).sqrt() + static_cast<S>(hyper.eps));
    if (tensor.rank() >= 2 && hyper.weight_decay != 0.0) {
      w -= static_cast<S>(lr) * (step + static_cast<S>(hyper.weight_decay) * w);
    } else {
      w -= static_cast<S>(lr) * step;
    }
  }
}

template <typename S>
double clip_grad_norm(ModelParameters<S>& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, t] : params.entries()) {
    if (t.has_grad()) sq += t.node()->grad.template cast<double>().square().sum();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const S factor = static_cast<S>(max_norm / norm);
    for (auto& [name, t] : params.entries()) {
      if (t.has_grad()) t.node()->grad *= factor;
    }
  }
  return norm;
}

template OptimizerState<float> make_optimizer_state(const ModelParameters<float>&);
template OptimizerState<double> make_optimizer_state(const ModelParameters<double>&);
template void adam_update(ModelParameters<float>&, OptimizerState<float>&, double, const AdamHyper&);
template void adam_update(ModelParameters<double>&, OptimizerState<double>&, double, const AdamHyper&);
template double clip_grad_norm(ModelParameters<float>&, double);
template double clip_grad_norm(ModelParameters<double>&, double);

}  // namespace albt
