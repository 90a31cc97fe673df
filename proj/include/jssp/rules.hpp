#pragma once

#include <cstdint>
#include <string>

#include "jssp/env.hpp"

namespace jssp {

// Classical priority dispatching rules.
struct Rule {
  enum class Kind { SPT, MWKR, FDDMWKR, MOPNR, Random };
  Kind kind = Kind::SPT;
  std::uint64_t seed = 0;  // Random only

  static Rule spt() { return {Kind::SPT, 0}; }
  static Rule mwkr() { return {Kind::MWKR, 0}; }
  static Rule fdd_mwkr() { return {Kind::FDDMWKR, 0}; }
  static Rule mopnr() { return {Kind::MOPNR, 0}; }
  static Rule random(std::uint64_t seed) { return {Kind::Random, seed}; }
};

// Score of an eligible operation; the dispatcher picks the minimum.
// Max-rules (MWKR, MOPNR) are negated.
double priority(const Rule& rule, const State& s, OpId op);

struct PdrResult {
  State state;
  Time makespan;
  double wall_ms;
};

// reset -> argmin priority (ties to the lowest job index) -> step, until done.
PdrResult run_pdr(const Instance& inst, const Rule& rule, Insertion mode = Insertion::Push);

// CLI names: spt, mwkr, fdd-mwkr, mopnr, random.
Rule parse_rule(const std::string& name, std::uint64_t seed = 0);
std::string rule_name(const Rule& rule);

}  // namespace jssp
