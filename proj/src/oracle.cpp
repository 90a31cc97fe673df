#include "jssp/oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jssp/rules.hpp"

namespace jssp {

namespace {

class Search {
 public:
  Search(const Instance& inst, std::int64_t limit, Time incumbent)
      : inst_(inst), limit_(limit), best_(incumbent) {
    next_.assign(inst.num_jobs, 0);
    job_ready_ = inst.release;
    mach_ready_.assign(inst.num_machines, 0);
    job_left_.assign(inst.num_jobs, 0);
    mach_left_.assign(inst.num_machines, 0);
    for (int j = 0; j < inst.num_jobs; ++j)
      for (int k = 0; k < inst.ops_in_job(j); ++k) {
        job_left_[j] += inst.proc_times[j][k];
        mach_left_[inst.routes[j][k]] += inst.proc_times[j][k];
      }
  }

  void run() { dfs(0); }
  bool aborted() const { return aborted_; }
  Time best() const { return best_; }
  std::int64_t nodes() const { return nodes_; }

 private:
  Time bound(Time current) const {
    Time lb = current;
    for (int j = 0; j < inst_.num_jobs; ++j) lb = std::max(lb, job_ready_[j] + job_left_[j]);
    for (int m = 0; m < inst_.num_machines; ++m)
      if (mach_left_[m] > 0) lb = std::max(lb, mach_ready_[m] + mach_left_[m]);
    return lb;
  }

  void dfs(Time current) {
    if (aborted_) return;
    if (++nodes_ > limit_) {
      aborted_ = true;
      return;
    }
    // Earliest completion among schedulable operations fixes the conflict machine.
    int pick = -1;
    Time pick_ect = 0;
    for (int j = 0; j < inst_.num_jobs; ++j) {
      if (next_[j] >= inst_.ops_in_job(j)) continue;
      const int m = inst_.routes[j][next_[j]];
      const Time ect = std::max(job_ready_[j], mach_ready_[m]) + inst_.proc_times[j][next_[j]];
      if (pick < 0 || ect < pick_ect) {
        pick = j;
        pick_ect = ect;
      }
    }
    if (pick < 0) {
      best_ = std::min(best_, current);
      return;
    }
    if (bound(current) >= best_) return;

    const int machine = inst_.routes[pick][next_[pick]];
    for (int j = 0; j < inst_.num_jobs; ++j) {
      if (next_[j] >= inst_.ops_in_job(j) || inst_.routes[j][next_[j]] != machine) continue;
      const Time est = std::max(job_ready_[j], mach_ready_[machine]);
      if (est >= pick_ect) continue;
      const Time p = inst_.proc_times[j][next_[j]];
      const Time saved_job = job_ready_[j], saved_mach = mach_ready_[machine];
      job_ready_[j] = mach_ready_[machine] = est + p;
      job_left_[j] -= p;
      mach_left_[machine] -= p;
      ++next_[j];
      dfs(std::max(current, est + p));
      --next_[j];
      job_left_[j] += p;
      mach_left_[machine] += p;
      job_ready_[j] = saved_job;
      mach_ready_[machine] = saved_mach;
      if (aborted_) return;
    }
  }

  const Instance& inst_;
  std::int64_t limit_;
  Time best_;
  std::int64_t nodes_ = 0;
  bool aborted_ = false;
  std::vector<int> next_;
  std::vector<Time> job_ready_, mach_ready_, job_left_, mach_left_;
};

}  // namespace

OracleResult optimal_makespan(const Instance& inst, std::int64_t node_limit) {
  if (node_limit <= 0) throw std::invalid_argument("node_limit must be positive");
  Search search(inst, node_limit, std::numeric_limits<Time>::max());
  search.run();
  Time best = search.best();
  // A search stopped before its first leaf still owes a feasible answer.
  if (best == std::numeric_limits<Time>::max())
    best = run_pdr(inst, Rule::fdd_mwkr(), Insertion::Push).makespan;
  return {best, search.aborted() ? Proof::LimitHit : Proof::Optimal, search.nodes()};
}

const char* proof_name(Proof p) { return p == Proof::Optimal ? "Optimal" : "LimitHit"; }

}  // namespace jssp
