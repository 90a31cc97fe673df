#pragma once

#include <cstdint>

#include "jssp/instance.hpp"

namespace jssp {

enum class Proof { Optimal, LimitHit };

struct OracleResult {
  Time makespan = 0;
  Proof proof = Proof::LimitHit;
  std::int64_t nodes = 0;
};

// Exact makespan for tiny instances: depth-first Giffler-Thompson branching
// over active schedules with incumbent pruning. Stops after `node_limit`
// search nodes and then reports the incumbent with Proof::LimitHit.
// Throws std::invalid_argument when node_limit <= 0.
OracleResult optimal_makespan(const Instance& inst, std::int64_t node_limit);

const char* proof_name(Proof p);

}  // namespace jssp
