#include "mqa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mqa {

GradCheckResult grad_check(const std::function<double(const ParamSet&)>& loss,
                           ParamSet& point, const GradSet& analytic,
                           double step, double abs_floor) {
  require_dim(analytic.size(), point.size(), "grad_check gradients");
  GradCheckResult r;
  for (std::size_t p = 0; p < point.size(); ++p) {
    Tensor& w = point.value(p);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + step;
      const double up = loss(point);
      w[i] = orig - step;
      const double down = loss(point);
      w[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++r.checked;
      if (rel > r.max_rel_error || r.worst_param.empty()) {
        if (rel >= r.max_rel_error) {
          r.max_rel_error = rel;
          r.worst_param = point[p].name;
          r.worst_index = i;
          r.analytic = a;
          r.numeric = numeric;
        }
      }
    }
  }
  return r;
}

}  // namespace mqa
