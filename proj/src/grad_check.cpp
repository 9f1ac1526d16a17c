#include "albt/grad_check.h"

#include <algorithm>
#include <cmath>

namespace albt {

GradCheckResult grad_check(const std::function<Tensor<double>()>& f,
                           std::vector<Tensor<double>> inputs, double eps, Stencil stencil) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  const auto loss = f();
  if (loss.numel() != 1) throw InvalidShape("grad_check: function must return a scalar");
  backward(loss);

  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Array<double> analytic = inputs[i].grad();
    auto& values = inputs[i].mutable_data();
    for (std::int64_t j = 0; j < values.size(); ++j) {
      const double original = values[j];
      auto at = [&](double offset) {
        values[j] = original + offset;
        return static_cast<double>(f().item());
      };
      double numeric = 0.0;
      {
        NoGradGuard no_grad;
        const double near = at(eps) - at(-eps);
        if (stencil == Stencil::kCentral) {
          numeric = near / (2.0 * eps);
        } else {
          const double far = at(2.0 * eps) - at(-2.0 * eps);
          numeric = (8.0 * near - far) / (12.0 * eps);
        }
      }
      values[j] = original;
      const double a = analytic[j];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++result.elements_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_input = i;
        result.worst_index = j;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace albt
