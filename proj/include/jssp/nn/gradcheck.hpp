#pragma once

#include <functional>
#include <limits>
#include <string>

#include "jssp/nn/tape.hpp"

namespace jssp::nn {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

// Compares reverse-mode gradients of loss(tape) with central differences
// on the entries of `params`. Relative error is |a - n| / max(|a|, |n|, floor).
// At most `per_param` entries of each tensor are probed (evenly spaced).
GradCheck grad_check(ParamStore& params, const std::function<Var(Tape&)>& loss, double h = 1e-5,
                     std::size_t per_param = std::numeric_limits<std::size_t>::max(), double floor = 1e-3);

}  // namespace jssp::nn
