#include "jssp/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace jssp::nn {

AdamState::AdamState(const ParamStore& params, double lr_) : lr(lr_) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m.emplace_back(params.value(i).shape(), 0.0);
    v.emplace_back(params.value(i).shape(), 0.0);
  }
}

void adam_step(ParamStore& params, AdamState& opt) {
  if (!params.has_grad()) throw std::logic_error("adam_step without gradients");
  if (opt.m.size() != params.size() || opt.v.size() != params.size())
    throw ShapeError("optimizer state does not match the parameter store");
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params.value(i);
    const Tensor& g = params.grad(i);
    Tensor& m = opt.m[i];
    Tensor& v = opt.v[i];
    if (!m.same_shape(w) || !v.same_shape(w)) throw ShapeError("moment shape mismatch for " + params.name(i));
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
      w[k] -= opt.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt.eps);
    }
    if (!w.all_finite()) throw NonFiniteError("adam produced non-finite " + params.name(i));
  }
  params.zero_grad();
  params.bump_version();
}

}  // namespace jssp::nn
