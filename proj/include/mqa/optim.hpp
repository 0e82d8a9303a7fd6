#pragma once

#include "mqa/params.hpp"

namespace mqa {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  GradSet m;  // first moments, lazily shaped on the first step
  GradSet v;  // second moments
};

// One bias-corrected Adam update; increments state.step.
void adam_step(ParamSet& params, const GradSet& grads, AdamState& state);

}  // namespace mqa
