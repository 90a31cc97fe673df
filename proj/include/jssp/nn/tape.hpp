#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jssp/nn/tensor.hpp"

namespace jssp::nn {

// Named trainable tensors with matching gradient buffers, in insertion order.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }

  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor& value(std::size_t i) { return entries_[i].value; }
  const Tensor& value(std::size_t i) const { return entries_[i].value; }
  Tensor& grad(std::size_t i) { return entries_[i].grad; }
  const Tensor& grad(std::size_t i) const { return entries_[i].grad; }
  Tensor& value(const std::string& n) { return value(index_of(n)); }
  const Tensor& value(const std::string& n) const { return value(index_of(n)); }
  Tensor& grad(const std::string& n) { return grad(index_of(n)); }

  void zero_grad();
  bool has_grad() const { return has_grad_; }
  void mark_grad() { has_grad_ = true; }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  std::size_t scalar_count() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
  bool has_grad_ = false;
};

struct BatchNormStats {
  Tensor running_mean;  // 1 x d
  Tensor running_var;   // 1 x d
  explicit BatchNormStats(std::size_t d = 0)
      : running_mean(1, d, 0.0), running_var(1, d, 1.0) {}
  friend bool operator==(const BatchNormStats&, const BatchNormStats&) = default;
};

enum class BnMode { Train, Eval };

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  const Tensor& value() const;
  const Tensor& grad() const;
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, which is
// a topological order, so backward() visits them in reverse. Gradients of
// parameter leaves are added into the bound ParamStore in that fixed order.
class Tape {
 public:
  // With track_grad off, parameter leaves are plain constants and no
  // backward closures are kept (rollouts under a frozen policy).
  explicit Tape(ParamStore* params = nullptr, bool track_grad = true)
      : params_(params), track_grad_(track_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  Var param(const std::string& name);

  // Seeds d(loss)=1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;
  Var record(Tensor value, std::vector<int> parents, Backward backward, const char* op);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  Tensor& grad_buffer(int id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool needs_grad = false;
    int param = -1;
  };
  std::vector<Node> nodes_;
  ParamStore* params_;
  bool track_grad_;
  bool backward_done_ = false;
};

// ---- ops ---------------------------------------------------------------

Var dense(Var x, Var w, Var b);                 // x[n,in] w[in,out] b[1,out]
Var relu(Var x);
Var add(Var x, Var y);                          // same shape
Var sub(Var x, Var y);
Var mul(Var x, Var y);                          // elementwise
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
Var exp(Var x);
Var square(Var x);
Var clamp(Var x, double lo, double hi);
Var minimum(Var x, Var y);
Var sum(Var x);                                 // -> 1x1
Var concat_cols(Var x, Var y);                  // [n,a] ++ [n,b] -> [n,a+b]
Var neighbor_sum(Var x, const std::vector<std::vector<int>>& incoming);
Var mean_rows(Var x);                           // [n,d] -> [1,d]
Var gather_rows(Var x, const std::vector<int>& rows);
Var repeat_rows(Var x, std::size_t n);          // [1,d] -> [n,d]
Var pick(Var x, std::size_t index);             // flat element -> 1x1

// Batch normalisation over rows (the node dimension). In Train mode batch
// statistics are used and, when update_stats is set, folded into `stats`
// with momentum 0.1 (unbiased variance); Eval mode uses `stats`.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, BnMode mode,
               bool update_stats);

// Distributions over the flattened elements of x; masked-out entries get
// probability exactly 0. Throws std::invalid_argument on an empty mask.
Var softmax_masked(Var x, const std::vector<char>& mask);
Var log_softmax_masked(Var x, const std::vector<char>& mask);  // masked entries are 0
Var log_prob(Var log_probs, std::size_t index);
Var entropy_masked(Var x, const std::vector<char>& mask);       // of softmax_masked(x)

}  // namespace jssp::nn
