#include "jssp/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace jssp::nn {

GradCheck grad_check(ParamStore& params, const std::function<Var(Tape&)>& loss, double h, std::size_t per_param,
                     double floor) {
  params.zero_grad();
  {
    Tape tape(&params);
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape(&params, false);
    return loss(tape).value()[0];
  };

  GradCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params.value(i);
    const std::size_t n = w.size();
    const std::size_t stride = std::max<std::size_t>(1, n / std::min(n, per_param));
    for (std::size_t k = 0; k < n; k += stride) {
      const double keep = w[k];
      w[k] = keep + h;
      const double up = eval();
      w[k] = keep - h;
      const double down = eval();
      w[k] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = params.grad(i)[k];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.max_rel_error || out.worst.empty()) {
        out.max_rel_error = std::max(out.max_rel_error, rel);
        if (rel >= out.max_rel_error) out.worst = params.name(i) + "[" + std::to_string(k) + "]";
      }
    }
  }
  params.zero_grad();
  return out;
}

}  // namespace jssp::nn
