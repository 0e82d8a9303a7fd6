#pragma once

#include <functional>
#include <string>

#include "mqa/params.hpp"

namespace mqa {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Compares `analytic` against central differences of `loss` at `point`,
// coordinate by coordinate. The relative error of one coordinate is
// |a - n| / max(|a|, |n|, abs_floor); the floor keeps coordinates whose true
// gradient is ~0 from reporting pure rounding noise as relative error.
// `point` is perturbed in place and restored.
GradCheckResult grad_check(const std::function<double(const ParamSet&)>& loss,
                           ParamSet& point, const GradSet& analytic,
                           double step = 1e-5, double abs_floor = 1e-4);

}  // namespace mqa
