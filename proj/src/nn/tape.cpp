#include "jssp/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jssp::nn {

// ---- ParamStore ----------------------------------------------------------

void ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  Tensor grad(value.shape(), 0.0);
  entries_.push_back({name, std::move(value), std::move(grad)});
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
  has_grad_ = false;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

// ---- Tape ----------------------------------------------------------------

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

Var Tape::constant(Tensor t) {
  if (!t.all_finite()) throw NonFiniteError("constant holds non-finite values");
  nodes_.push_back({std::move(t), Tensor(), nullptr, false, -1});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const std::string& name) {
  if (!params_) throw std::logic_error("tape has no parameter store");
  const std::size_t i = params_->index_of(name);
  nodes_.push_back({params_->value(i), Tensor(), nullptr, track_grad_, static_cast<int>(i)});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, std::vector<int> parents, Backward backward, const char* op) {
  if (!value.all_finite()) throw NonFiniteError(std::string(op) + " produced a non-finite value");
  bool needs = false;
  for (int p : parents) needs = needs || nodes_[p].needs_grad;
  nodes_.push_back({std::move(value), Tensor(), needs ? std::move(backward) : nullptr, needs, -1});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value))
    n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this || loss.id < 0 || loss.id >= static_cast<int>(nodes_.size()))
    throw std::logic_error("backward on a node that is not on this tape");
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  if (nodes_[loss.id].value.size() != 1) throw ShapeError("backward needs a 1x1 loss");
  backward_done_ = true;
  grad_buffer(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (!n.grad.all_finite()) throw NonFiniteError("non-finite gradient during backward");
    if (n.backward) {
      n.backward(*this, n.grad);
    } else if (n.param >= 0) {
      Tensor& g = params_->grad(static_cast<std::size_t>(n.param));
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
      params_->mark_grad();
    }
  }
}

// ---- ops -----------------------------------------------------------------

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("vars from different tapes");
}

void check_mask(const std::vector<char>& mask, std::size_t n) {
  require(mask.size() == n, "mask size " + std::to_string(mask.size()) + " != " + std::to_string(n));
  if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; }))
    throw std::invalid_argument("empty mask");
}

// Accumulate `g` into the gradient of node `id` if it wants one.
void accum(Tape& t, int id, const Tensor& g) {
  if (!t.needs_grad(id)) return;
  Tensor& dst = t.grad_buffer(id);
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
}

}  // namespace

Var dense(Var x, Var w, Var b) {
  same_tape(x, w);
  same_tape(x, b);
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  const Tensor& B = b.value();
  require(X.cols() == W.rows(), "dense: x " + X.shape_string() + " vs w " + W.shape_string());
  require(B.rows() == 1 && B.cols() == W.cols(), "dense: bias " + B.shape_string());
  const std::size_t n = X.rows(), in = W.rows(), out = W.cols();
  Tensor Y(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < out; ++c) Y(r, c) = B(0, c);
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = X(r, k);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < out; ++c) Y(r, c) += xv * W(k, c);
    }
  }
  const int xi = x.id, wi = w.id, bi = b.id;
  return x.tape->record(std::move(Y), {xi, wi, bi}, [=](Tape& t, const Tensor& G) {
    const Tensor& X = t.value({&t, xi});
    const Tensor& W = t.value({&t, wi});
    if (t.needs_grad(xi)) {
      Tensor& dX = t.grad_buffer(xi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < in; ++k) {
          double s = 0.0;
          for (std::size_t c = 0; c < out; ++c) s += G(r, c) * W(k, c);
          dX(r, k) += s;
        }
    }
    if (t.needs_grad(wi)) {
      Tensor& dW = t.grad_buffer(wi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < in; ++k) {
          const double xv = X(r, k);
          if (xv == 0.0) continue;
          for (std::size_t c = 0; c < out; ++c) dW(k, c) += xv * G(r, c);
        }
    }
    if (t.needs_grad(bi)) {
      Tensor& dB = t.grad_buffer(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < out; ++c) dB(0, c) += G(r, c);
    }
  }, "dense");
}

Var relu(Var x) {
  Tensor Y = x.value();
  for (double& v : Y.values()) v = v > 0.0 ? v : 0.0;
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& X = t.value({&t, xi});
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < G.size(); ++k)
      if (X[k] > 0.0) dX[k] += G[k];
  }, "relu");
}

Var add(Var x, Var y) {
  same_tape(x, y);
  require(x.value().same_shape(y.value()), "add: " + x.value().shape_string() + " vs " + y.value().shape_string());
  Tensor Z = x.value();
  for (std::size_t k = 0; k < Z.size(); ++k) Z[k] += y.value()[k];
  const int xi = x.id, yi = y.id;
  return x.tape->record(std::move(Z), {xi, yi}, [xi, yi](Tape& t, const Tensor& G) {
    accum(t, xi, G);
    accum(t, yi, G);
  }, "add");
}

Var sub(Var x, Var y) {
  same_tape(x, y);
  require(x.value().same_shape(y.value()), "sub: " + x.value().shape_string() + " vs " + y.value().shape_string());
  Tensor Z = x.value();
  for (std::size_t k = 0; k < Z.size(); ++k) Z[k] -= y.value()[k];
  const int xi = x.id, yi = y.id;
  return x.tape->record(std::move(Z), {xi, yi}, [xi, yi](Tape& t, const Tensor& G) {
    accum(t, xi, G);
    if (!t.needs_grad(yi)) return;
    Tensor& dY = t.grad_buffer(yi);
    for (std::size_t k = 0; k < G.size(); ++k) dY[k] -= G[k];
  }, "sub");
}

Var mul(Var x, Var y) {
  same_tape(x, y);
  require(x.value().same_shape(y.value()), "mul: " + x.value().shape_string() + " vs " + y.value().shape_string());
  Tensor Z = x.value();
  for (std::size_t k = 0; k < Z.size(); ++k) Z[k] *= y.value()[k];
  const int xi = x.id, yi = y.id;
  return x.tape->record(std::move(Z), {xi, yi}, [xi, yi](Tape& t, const Tensor& G) {
    const Tensor& X = t.value({&t, xi});
    const Tensor& Y = t.value({&t, yi});
    if (t.needs_grad(xi)) {
      Tensor& dX = t.grad_buffer(xi);
      for (std::size_t k = 0; k < G.size(); ++k) dX[k] += G[k] * Y[k];
    }
    if (t.needs_grad(yi)) {
      Tensor& dY = t.grad_buffer(yi);
      for (std::size_t k = 0; k < G.size(); ++k) dY[k] += G[k] * X[k];
    }
  }, "mul");
}

Var scale(Var x, double c) {
  Tensor Y = x.value();
  for (double& v : Y.values()) v *= c;
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, c](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < G.size(); ++k) dX[k] += c * G[k];
  }, "scale");
}

Var add_scalar(Var x, double c) {
  Tensor Y = x.value();
  for (double& v : Y.values()) v += c;
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi](Tape& t, const Tensor& G) { accum(t, xi, G); },
                        "add_scalar");
}

Var exp(Var x) {
  Tensor Y = x.value();
  for (double& v : Y.values()) v = std::exp(v);
  const int xi = x.id;
  const int yi = static_cast<int>(x.tape->size());
  return x.tape->record(std::move(Y), {xi}, [xi, yi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& Y = t.value({&t, yi});
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < G.size(); ++k) dX[k] += G[k] * Y[k];
  }, "exp");
}

Var square(Var x) {
  Tensor Y = x.value();
  for (double& v : Y.values()) v *= v;
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& X = t.value({&t, xi});
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < G.size(); ++k) dX[k] += 2.0 * X[k] * G[k];
  }, "square");
}

Var clamp(Var x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Tensor Y = x.value();
  for (double& v : Y.values()) v = std::clamp(v, lo, hi);
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, lo, hi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& X = t.value({&t, xi});
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < G.size(); ++k)
      if (X[k] >= lo && X[k] <= hi) dX[k] += G[k];
  }, "clamp");
}

Var minimum(Var x, Var y) {
  same_tape(x, y);
  require(x.value().same_shape(y.value()), "minimum: shape mismatch");
  Tensor Z = x.value();
  for (std::size_t k = 0; k < Z.size(); ++k) Z[k] = std::min(Z[k], y.value()[k]);
  const int xi = x.id, yi = y.id;
  return x.tape->record(std::move(Z), {xi, yi}, [xi, yi](Tape& t, const Tensor& G) {
    const Tensor& X = t.value({&t, xi});
    const Tensor& Y = t.value({&t, yi});
    // Ties send the gradient to the first argument.
    for (std::size_t k = 0; k < G.size(); ++k) {
      const int dst = X[k] <= Y[k] ? xi : yi;
      if (t.needs_grad(dst)) t.grad_buffer(dst)[k] += G[k];
    }
  }, "minimum");
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const int xi = x.id;
  return x.tape->record(Tensor::scalar(s), {xi}, [xi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (double& v : dX.values()) v += G[0];
  }, "sum");
}

Var concat_cols(Var x, Var y) {
  same_tape(x, y);
  const Tensor& X = x.value();
  const Tensor& Y = y.value();
  require(X.rows() == Y.rows(), "concat: rows " + X.shape_string() + " vs " + Y.shape_string());
  const std::size_t n = X.rows(), a = X.cols(), b = Y.cols();
  Tensor Z(n, a + b);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < a; ++c) Z(r, c) = X(r, c);
    for (std::size_t c = 0; c < b; ++c) Z(r, a + c) = Y(r, c);
  }
  const int xi = x.id, yi = y.id;
  return x.tape->record(std::move(Z), {xi, yi}, [=](Tape& t, const Tensor& G) {
    if (t.needs_grad(xi)) {
      Tensor& dX = t.grad_buffer(xi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < a; ++c) dX(r, c) += G(r, c);
    }
    if (t.needs_grad(yi)) {
      Tensor& dY = t.grad_buffer(yi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < b; ++c) dY(r, c) += G(r, a + c);
    }
  }, "concat");
}

Var neighbor_sum(Var x, const std::vector<std::vector<int>>& incoming) {
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  require(incoming.size() == n, "neighbor_sum: adjacency has " + std::to_string(incoming.size()) +
                                    " rows, x has " + std::to_string(n));
  for (const auto& nb : incoming)
    for (int u : nb) require(u >= 0 && static_cast<std::size_t>(u) < n, "neighbor_sum: index out of range");
  Tensor Y(n, d);
  for (std::size_t v = 0; v < n; ++v)
    for (int u : incoming[v])
      for (std::size_t c = 0; c < d; ++c) Y(v, c) += X(u, c);
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, incoming, d](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t v = 0; v < incoming.size(); ++v)
      for (int u : incoming[v])
        for (std::size_t c = 0; c < d; ++c) dX(u, c) += G(v, c);
  }, "neighbor_sum");
}

Var mean_rows(Var x) {
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  require(n > 0, "mean_rows of an empty matrix");
  Tensor Y(1, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) Y(0, c) += X(r, c);
  for (std::size_t c = 0; c < d; ++c) Y(0, c) /= static_cast<double>(n);
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, n, d](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) dX(r, c) += G(0, c) / static_cast<double>(n);
  }, "mean_rows");
}

Var gather_rows(Var x, const std::vector<int>& rows) {
  const Tensor& X = x.value();
  const std::size_t d = X.cols();
  Tensor Y(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && static_cast<std::size_t>(rows[r]) < X.rows(), "gather_rows: index out of range");
    for (std::size_t c = 0; c < d; ++c) Y(r, c) = X(rows[r], c);
  }
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, rows, d](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) dX(rows[r], c) += G(r, c);
  }, "gather_rows");
}

Var repeat_rows(Var x, std::size_t n) {
  const Tensor& X = x.value();
  require(X.rows() == 1, "repeat_rows needs a single row, got " + X.shape_string());
  const std::size_t d = X.cols();
  Tensor Y(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) Y(r, c) = X(0, c);
  const int xi = x.id;
  return x.tape->record(std::move(Y), {xi}, [xi, n, d](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) dX(0, c) += G(r, c);
  }, "repeat_rows");
}

Var pick(Var x, std::size_t index) {
  require(index < x.value().size(), "pick: index out of range");
  const int xi = x.id;
  return x.tape->record(Tensor::scalar(x.value()[index]), {xi}, [xi, index](Tape& t, const Tensor& G) {
    if (t.needs_grad(xi)) t.grad_buffer(xi)[index] += G[0];
  }, "pick");
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, BnMode mode, bool update_stats) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), d = X.cols();
  require(gamma.value().rows() == 1 && gamma.value().cols() == d, "batch_norm: gamma " + gamma.value().shape_string());
  require(beta.value().rows() == 1 && beta.value().cols() == d, "batch_norm: beta " + beta.value().shape_string());
  require(stats.running_mean.cols() == d && stats.running_var.cols() == d, "batch_norm: stats width");
  require(n > 0, "batch_norm of an empty matrix");

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  if (mode == BnMode::Train) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) mean[c] += X(r, c);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const double e = X(r, c) - mean[c];
        var[c] += e * e;
      }
    for (double& v : var) v /= static_cast<double>(n);
    if (update_stats) {
      const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      for (std::size_t c = 0; c < d; ++c) {
        stats.running_mean(0, c) = (1.0 - kBnMomentum) * stats.running_mean(0, c) + kBnMomentum * mean[c];
        stats.running_var(0, c) = (1.0 - kBnMomentum) * stats.running_var(0, c) + kBnMomentum * var[c] * unbias;
      }
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) {
      mean[c] = stats.running_mean(0, c);
      var[c] = stats.running_var(0, c);
    }
  }

  std::vector<double> inv_std(d);
  for (std::size_t c = 0; c < d; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kBnEps);
  Tensor xhat(n, d), Y(n, d);
  const Tensor& g = gamma.value();
  const Tensor& b = beta.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (X(r, c) - mean[c]) * inv_std[c];
      Y(r, c) = g(0, c) * xhat(r, c) + b(0, c);
    }

  const int xi = x.id, gi = gamma.id, bi = beta.id;
  const bool batch = mode == BnMode::Train;
  return x.tape->record(std::move(Y), {xi, gi, bi},
                        [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Tensor& G) {
    const Tensor& gv = t.value({&t, gi});
    if (t.needs_grad(gi)) {
      Tensor& dg = t.grad_buffer(gi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) dg(0, c) += G(r, c) * xhat(r, c);
    }
    if (t.needs_grad(bi)) {
      Tensor& db = t.grad_buffer(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) db(0, c) += G(r, c);
    }
    if (!t.needs_grad(xi)) return;
    Tensor& dX = t.grad_buffer(xi);
    if (!batch) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) dX(r, c) += G(r, c) * gv(0, c) * inv_std[c];
      return;
    }
    // dx = gamma/sigma * (g - mean(g) - xhat * mean(g*xhat))
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) {
      double mg = 0.0, mgx = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        mg += G(r, c);
        mgx += G(r, c) * xhat(r, c);
      }
      mg *= inv_n;
      mgx *= inv_n;
      const double k = gv(0, c) * inv_std[c];
      for (std::size_t r = 0; r < n; ++r) dX(r, c) += k * (G(r, c) - mg - xhat(r, c) * mgx);
    }
  }, "batch_norm");
}

namespace {

// Stable log-softmax over the unmasked entries; masked entries are set to 0.
std::vector<double> masked_log_softmax(const Tensor& X, const std::vector<char>& mask) {
  double mx = -INFINITY;
  for (std::size_t k = 0; k < X.size(); ++k)
    if (mask[k]) mx = std::max(mx, X[k]);
  double z = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k)
    if (mask[k]) z += std::exp(X[k] - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(X.size(), 0.0);
  for (std::size_t k = 0; k < X.size(); ++k)
    if (mask[k]) out[k] = X[k] - lz;
  return out;
}

}  // namespace

Var softmax_masked(Var x, const std::vector<char>& mask) {
  const Tensor& X = x.value();
  check_mask(mask, X.size());
  auto lp = masked_log_softmax(X, mask);
  Tensor P(X.shape(), 0.0);
  for (std::size_t k = 0; k < P.size(); ++k)
    if (mask[k]) P[k] = std::exp(lp[k]);
  const int xi = x.id;
  const int pi = static_cast<int>(x.tape->size());
  return x.tape->record(std::move(P), {xi}, [xi, pi](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& P = t.value({&t, pi});
    double dot = 0.0;
    for (std::size_t k = 0; k < P.size(); ++k) dot += G[k] * P[k];
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < P.size(); ++k) dX[k] += P[k] * (G[k] - dot);
  }, "softmax_masked");
}

Var log_softmax_masked(Var x, const std::vector<char>& mask) {
  const Tensor& X = x.value();
  check_mask(mask, X.size());
  Tensor L(X.shape(), masked_log_softmax(X, mask));
  const int xi = x.id;
  const int li = static_cast<int>(x.tape->size());
  return x.tape->record(std::move(L), {xi}, [xi, li, mask](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    const Tensor& L = t.value({&t, li});
    double gs = 0.0;
    for (std::size_t k = 0; k < L.size(); ++k)
      if (mask[k]) gs += G[k];
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < L.size(); ++k)
      if (mask[k]) dX[k] += G[k] - std::exp(L[k]) * gs;
  }, "log_softmax_masked");
}

Var log_prob(Var log_probs, std::size_t index) { return pick(log_probs, index); }

Var entropy_masked(Var x, const std::vector<char>& mask) {
  const Tensor& X = x.value();
  check_mask(mask, X.size());
  auto lp = masked_log_softmax(X, mask);
  double h = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k)
    if (mask[k]) h -= std::exp(lp[k]) * lp[k];
  const int xi = x.id;
  return x.tape->record(Tensor::scalar(h), {xi}, [xi, mask, lp = std::move(lp), h](Tape& t, const Tensor& G) {
    if (!t.needs_grad(xi)) return;
    // dH/dx_k = -p_k (log p_k + H)
    Tensor& dX = t.grad_buffer(xi);
    for (std::size_t k = 0; k < lp.size(); ++k)
      if (mask[k]) dX[k] += -G[0] * std::exp(lp[k]) * (lp[k] + h);
  }, "entropy");
}

}  // namespace jssp::nn
