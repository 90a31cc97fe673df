#include "jssp/rules.hpp"

#include <chrono>
#include <stdexcept>

#include "jssp/rng.hpp"

namespace jssp {

namespace {

Time remaining_work(const Instance& inst, OpId op) {
  Time w = 0;
  for (int k = op.pos; k < inst.ops_in_job(op.job); ++k) w += inst.proc_times[op.job][k];
  return w;
}

Time work_done_through(const Instance& inst, OpId op) {
  Time w = 0;
  for (int k = 0; k <= op.pos; ++k) w += inst.proc_times[op.job][k];
  return w;
}

}  // namespace

double priority(const Rule& rule, const State& s, OpId op) {
  if (!s.is_eligible(op)) throw std::invalid_argument("priority of an ineligible operation");
  const Instance& inst = s.instance();
  switch (rule.kind) {
    case Rule::Kind::SPT:
      return static_cast<double>(inst.duration(op));
    case Rule::Kind::MWKR:
      return -static_cast<double>(remaining_work(inst, op));
    case Rule::Kind::FDDMWKR:
      return static_cast<double>(inst.release[op.job] + work_done_through(inst, op)) /
             static_cast<double>(remaining_work(inst, op));
    case Rule::Kind::MOPNR:
      return -static_cast<double>(inst.ops_in_job(op.job) - op.pos);
    case Rule::Kind::Random:
      return Rng(derive_seed(rule.seed, static_cast<std::uint64_t>(s.steps()),
                             static_cast<std::uint64_t>(op.job)))
          .uniform01();
  }
  return 0.0;
}

PdrResult run_pdr(const Instance& inst, const Rule& rule, Insertion mode) {
  auto t0 = std::chrono::steady_clock::now();
  State s = reset(inst, mode);
  while (!s.done()) {
    auto cands = s.eligible();
    OpId best = cands.front();
    double best_score = priority(rule, s, best);
    for (std::size_t k = 1; k < cands.size(); ++k) {
      double sc = priority(rule, s, cands[k]);
      if (sc < best_score) {  // strict: earlier (lower) job index wins ties
        best_score = sc;
        best = cands[k];
      }
    }
    s.step(best);
  }
  Time mk = s.makespan();
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(s), mk, ms};
}

Rule parse_rule(const std::string& name, std::uint64_t seed) {
  if (name == "spt") return Rule::spt();
  if (name == "mwkr") return Rule::mwkr();
  if (name == "fdd-mwkr" || name == "fdd/mwkr") return Rule::fdd_mwkr();
  if (name == "mopnr") return Rule::mopnr();
  if (name == "random") return Rule::random(seed);
  throw std::invalid_argument("unknown rule '" + name +
                              "' (expected spt, mwkr, fdd-mwkr, mopnr or random)");
}

std::string rule_name(const Rule& rule) {
  switch (rule.kind) {
    case Rule::Kind::SPT: return "spt";
    case Rule::Kind::MWKR: return "mwkr";
    case Rule::Kind::FDDMWKR: return "fdd-mwkr";
    case Rule::Kind::MOPNR: return "mopnr";
    case Rule::Kind::Random: return "random";
  }
  return "?";
}

}  // namespace jssp
