#include "mqa/optim.hpp"

#include <cmath>

namespace mqa {

void adam_step(ParamSet& params, const GradSet& grads, AdamState& state) {
  require_dim(grads.size(), params.size(), "adam gradients");
  if (state.m.empty()) {
    state.m = zero_grads(params);
    state.v = zero_grads(params);
  }
  require_dim(state.m.size(), params.size(), "adam moments");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params.value(p);
    const Tensor& g = grads[p];
    if (!g.same_shape(w)) {
      throw DimensionError("gradient shape mismatch for " + params[p].name);
    }
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    const long n = static_cast<long>(w.size());
#pragma omp parallel for schedule(static) if (n >= (1 << 16))
    for (long i = 0; i < n; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace mqa
