#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jssp/nn/adam.hpp"
#include "jssp/policy.hpp"
#include "jssp/report.hpp"

namespace jssp {

struct TrainConfig {
  // PPO
  int iterations = 10000;  // U
  int trajectories = 4;    // N
  double gamma = 1.0;
  int epochs = 1;
  double clip = 0.2;
  double c_policy = 2.0;
  double c_value = 1.0;
  double c_entropy = 0.01;
  double lr = 2e-5;
  double reward_scale = 1.0;  // rewards are multiplied by this before returns

  // instance distribution
  int jobs = 6;
  int machines = 6;
  Time duration_lo = 1;
  Time duration_hi = 99;
  Insertion semantics = Insertion::NoPush;

  // validation and logging
  int validation_size = 100;
  int validate_every = 10;
  int rolling_window = 200;

  std::uint64_t seed = 1;             // training instances and action sampling
  std::uint64_t init_seed = 7;        // network initialisation
  std::uint64_t validation_seed = 2024;
  int threads = 1;                    // rollout/validation workers; results do not depend on it

  PolicyConfig policy;

  // outputs
  std::string checkpoint = "best.ckpt.json";
  std::string last_checkpoint = "last.ckpt.json";
  std::string curve = "curve.csv";
  std::string resume;  // a last checkpoint to continue from

  void validate() const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys and bad
// values throw std::invalid_argument naming the key.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

struct Step {
  Observation obs;
  int action = 0;            // job slot
  double old_log_prob = 0.0;
  double reward = 0.0;       // scaled
  double value = 0.0;        // critic estimate under the behaviour policy
};

struct Trajectory {
  std::string instance_id;
  int num_ops = 0;
  Time h0 = 0;
  Time makespan = 0;
  std::vector<Step> steps;
};

// Samples one full episode under `policy` (Train-mode BN, statistics untouched).
Trajectory rollout(PolicyParams& policy, const Instance& inst, Insertion semantics, double reward_scale,
                   std::uint64_t sample_seed);

// N fresh instances from the configured distribution, one episode each.
// Deterministic in (params, config, iteration_seed); `policy` is not modified.
std::vector<Trajectory> collect_trajectories(PolicyParams& policy, const TrainConfig& config,
                                             std::uint64_t iteration_seed);

// Return-to-go G_t = sum_{k>=t} gamma^{k-t} r_k.
std::vector<double> returns_to_go(const Trajectory& traj, double gamma);
// G_t - v(s_t). Throws std::invalid_argument for an incomplete trajectory.
std::vector<double> advantages(const Trajectory& traj, double gamma);

struct LossReport {
  double clip = 0.0;     // sum of min(r A, clip(r) A)
  double value = 0.0;    // sum of (v - G)^2
  double entropy = 0.0;  // sum of policy entropies
  double total = 0.0;    // -(c_p clip - c_v value + c_e entropy), minimised
  double max_ratio_dev = 0.0;  // max |ratio - 1|
};

// Losses of `theta` on trajectories collected under the behaviour policy.
// With accumulate_grad, gradients of `total` are added to theta.store,
// state by state in trajectory order. Train-mode BN statistics of theta
// are updated when update_stats is set.
LossReport ppo_losses(const std::vector<Trajectory>& trajs, PolicyParams& theta, const TrainConfig& config,
                      bool accumulate_grad, bool update_stats = true);

struct CurveRow {
  int iteration = 0;
  std::int64_t instances_seen = 0;
  double avg_makespan_train = 0.0;
  std::optional<double> avg_makespan_validation;
  LossReport loss;
};

std::string curve_header();
std::string curve_line(const CurveRow& row);

struct TrainResult {
  PolicyParams best;
  double best_validation = 0.0;
  double initial_validation = 0.0;
  std::vector<CurveRow> curve;  // rows produced by this call
};

std::vector<Instance> validation_instances(const TrainConfig& config);

// Mean greedy makespan, Eval-mode BN.
double average_greedy_makespan(PolicyParams& params, const std::vector<Instance>& instances, Insertion semantics,
                               int threads = 1);

using ProgressFn = std::function<void(const CurveRow&)>;
TrainResult train(const TrainConfig& config, const ProgressFn& progress = {});

std::vector<EvalReport> evaluate(PolicyParams& params, const std::vector<Instance>& instances, const RefTable& refs,
                                 Insertion semantics, const std::string& method = "policy", int threads = 1);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; the first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace jssp
