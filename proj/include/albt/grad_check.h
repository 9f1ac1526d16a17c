#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "albt/tensor.h"

namespace albt {

struct GradCheckResult {
  double max_relative_error = 0.0;
  // Location of the worst element, for diagnostics.
  std::size_t worst_input = 0;
  std::int64_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t elements_checked = 0;
};

inline constexpr double kGradCheckStep = 1e-5;

enum class Stencil {
  kCentral,        // (f(x+h) - f(x-h)) / 2h
  kCentralFourth,  // (8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h
};

// Compares analytic gradients of `f` with respect to `inputs` against central
// differences, elementwise. The relative error at each element is
// |a - n| / max(|a|, |n|, 1e-8). Runs in double precision only; `f` must
// rebuild its graph from the current contents of `inputs` on every call and
// return a single-element tensor (InvalidShape otherwise).
//
// The fourth-order stencil tolerates a larger step, which keeps round-off in
// f out of the comparison for deep composites whose gradients can be ~1e-6.
GradCheckResult grad_check(const std::function<Tensor<double>()>& f,
                           std::vector<Tensor<double>> inputs, double eps = kGradCheckStep,
                           Stencil stencil = Stencil::kCentral);

}  // namespace albt
