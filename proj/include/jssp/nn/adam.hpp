#pragma once

#include <cstdint>
#include <vector>

#include "jssp/nn/tape.hpp"

namespace jssp::nn {

struct AdamState {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;  // aligned with ParamStore order
  std::vector<Tensor> v;

  AdamState() = default;
  AdamState(const ParamStore& params, double lr);
};

// One bias-corrected Adam update from the accumulated gradients, which are
// zeroed afterwards. Throws std::logic_error when no backward pass has
// written gradients since the last step.
void adam_step(ParamStore& params, AdamState& opt);

}  // namespace jssp::nn
