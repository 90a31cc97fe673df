#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "jssp/env.hpp"
#include "jssp/nn/tape.hpp"
#include "jssp/rng.hpp"

namespace jssp {

struct PolicyConfig {
  int k_layers = 2;          // GIN iterations
  int hidden_gin = 64;
  int embed_dim = 64;        // output width of every GIN MLP
  int hidden_head = 32;      // actor and critic hidden width
  double epsilon_gin = 0.0;  // fixed, not learned
  double feature_scale = 1000.0;
  AdjacencyMode adjacency = AdjacencyMode::AddingArc;

  void validate() const;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

// Trainable tensors plus batch-norm running statistics. Tensor shapes depend
// on the config only, never on the instance size.
struct PolicyParams {
  PolicyConfig config;
  nn::ParamStore store;
  std::vector<nn::BatchNormStats> bn;  // two per GIN iteration

  friend bool operator==(const PolicyParams& a, const PolicyParams& b);
};

// Xavier-uniform weights, zero biases, unit BN scale.
PolicyParams init_params(const PolicyConfig& config, std::uint64_t seed);

// Sets every parameter whose name starts with `prefix` to zero.
void zero_params(PolicyParams& params, const std::string& prefix = "");

// What the network sees of a state. Candidate slots are per job: the next
// operation of an unfinished job (mask 1), or the job's last operation
// (mask 0) once it is done.
struct Observation {
  Tensor features;  // |O| x 2
  Adjacency adj;
  std::vector<int> candidates;
  std::vector<char> mask;
};

Observation observe(const State& s, const PolicyConfig& config);

struct PolicyForward {
  nn::Var node_emb;   // |O| x p
  nn::Var graph_emb;  // 1 x p
  nn::Var scores;     // |J| x 1
  nn::Var log_probs;  // |J| x 1, 0 on masked slots
  nn::Var value;      // 1 x 1, only if requested
};

// Records the network on `tape`, which must be bound to params.store.
// update_stats folds Train-mode batch statistics into the running stats.
PolicyForward policy_forward(nn::Tape& tape, PolicyParams& params, const Observation& obs,
                             nn::BnMode mode, bool update_stats, bool with_value = true);

struct Embedding {
  Tensor nodes;  // |O| x p
  Tensor graph;  // 1 x p
};
Embedding embed(PolicyParams& params, const Tensor& features, const Adjacency& adj,
                nn::BnMode mode);

struct ActionDistribution {
  std::vector<OpId> ops;       // per job slot
  std::vector<char> mask;
  std::vector<double> probs;   // 0 exactly on masked slots
};

ActionDistribution actor_distribution(PolicyParams& params, const State& s, nn::BnMode mode);
double critic_value(PolicyParams& params, const State& s, nn::BnMode mode);

enum class SelectMode { Sample, Greedy };

// Slot index. Sample draws by inverse CDF from `rng`; Greedy takes the
// argmax, ties to the lowest job index. Zero-probability slots are never chosen.
int select_action(const std::vector<double>& probs, SelectMode mode, Rng* rng = nullptr);

struct PolicyRollout {
  State state;
  Time makespan;
  double wall_ms;
};

// Greedy episode in Eval mode.
PolicyRollout run_policy(PolicyParams& params, const Instance& inst, Insertion mode);

// ---- checkpoints -------------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json config_to_json(const PolicyConfig& c);
PolicyConfig config_from_json(const nlohmann::json& j);

// {version, config, tensors: name -> {shape, values}, bn: [...], meta}
nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     const nlohmann::json& meta = nlohmann::json::object());
// Throws CheckpointError on IO/format problems, or when `expected` is given
// and differs from the stored config.
PolicyParams load_checkpoint(const std::string& path, nlohmann::json* meta = nullptr,
                             const PolicyConfig* expected = nullptr);

}  // namespace jssp
