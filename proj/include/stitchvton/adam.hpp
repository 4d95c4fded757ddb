#pragma once

#include "stitchvton/parameters.hpp"

namespace stitchvton::nn {

struct AdamState {
  long step = 0;
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  ParameterSet first_moment;
  ParameterSet second_moment;
};

/// One bias-corrected Adam update of every parameter. `grads` must have
/// exactly the keys and shapes of `params`; moments are created lazily.
void adam_step(ParameterSet& params, const GradientMap& grads, AdamState& state);

}  // namespace stitchvton::nn
