#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jssp/instance.hpp"
#include "jssp/nn/tensor.hpp"

namespace jssp {

// How a dispatched operation is placed on its machine.
//
//  Push   - insert before the first scheduled operation o_k that starts
//           later than the earliest moment the new operation could start
//           (max of job-ready time and end of o_{k-1}); operations after it
//           may be delayed. Start times are then recomputed as longest paths.
//  NoPush - insert only into an idle gap that holds the whole operation,
//           otherwise append. Never moves anything already scheduled.
enum class Insertion { Push, NoPush };

enum class AdjacencyMode { AddingArc, RemovingArc };

struct StepOutcome {
  Time reward = 0;  // h_before - h_after, never positive
  bool done = false;
  Time h_before = 0;
  Time h_after = 0;
};

// Partial schedule over the disjunctive graph of one instance.
// Copyable value; each episode owns its State.
class State {
 public:
  State(std::shared_ptr<const Instance> inst, Insertion mode);

  const Instance& instance() const { return *inst_; }
  const std::shared_ptr<const Instance>& instance_ptr() const { return inst_; }
  Insertion insertion() const { return mode_; }

  // First unscheduled operation of every unfinished job, by job index.
  std::vector<OpId> eligible() const;
  bool is_eligible(OpId op) const;

  // Dispatches `op`. Throws std::invalid_argument when it is not eligible,
  // std::logic_error when the machine order would contain a cycle.
  StepOutcome step(OpId op);

  // Max over all operations of the completion lower bound.
  Time lower_bound() const { return h_; }
  // Max completion time; throws std::logic_error unless terminal.
  Time makespan() const;

  bool done() const { return steps_ == inst_->num_ops(); }
  int steps() const { return steps_; }

  bool scheduled(int flat) const { return scheduled_[flat] != 0; }
  Time start(int flat) const { return start_[flat]; }
  Time clb(int flat) const { return clb_[flat]; }
  Time end(int flat) const;
  const std::vector<std::vector<int>>& machine_sequences() const { return machine_seq_; }

  // Test hook: overwrite a start time without any bookkeeping.
  void corrupt_start_for_testing(int flat, Time start) { start_[flat] = start; }

 private:
  void recompute_starts();
  void recompute_bounds();

  std::shared_ptr<const Instance> inst_;
  Insertion mode_;
  std::vector<char> scheduled_;
  std::vector<Time> start_;
  std::vector<Time> clb_;
  std::vector<std::vector<int>> machine_seq_;  // flat op ids in processing order
  std::vector<int> next_pos_;                  // per job
  int steps_ = 0;
  Time h_ = 0;
};

State reset(const Instance& inst, Insertion mode = Insertion::Push);
State reset(std::shared_ptr<const Instance> inst, Insertion mode = Insertion::Push);

// Longest path from the dummy source to the dummy sink over conjunctions and
// the machine orders of a terminal state, computed without looking at the
// state's recorded start times. Throws std::logic_error on a cycle.
Time critical_path_makespan(const State& s);

// Longest-path start time of every scheduled operation of a (possibly
// partial) state; -1 for unscheduled ones. Independent of State::start.
std::vector<Time> longest_path_starts(const State& s);

// |O| x 2 matrix: (scheduled flag, completion lower bound / scale).
Tensor node_features(const State& s, double scale);

// Incoming-neighbour lists per operation (flat ids, ascending).
using Adjacency = std::vector<std::vector<int>>;
Adjacency adjacency(const State& s, AdjacencyMode mode);
std::size_t arc_count(const Adjacency& adj);

struct ScheduledOp {
  OpId op;
  int machine = 0;
  Time start = 0;
  Time end = 0;
};

struct Schedule {
  std::string instance_id;
  std::vector<ScheduledOp> ops;
  Time makespan() const;
};

// Scheduled operations of `s` in flat-index order.
Schedule extract_schedule(const State& s);

// Every violated constraint of a complete schedule; empty when feasible.
std::vector<std::string> verify_schedule(const Instance& inst, const Schedule& sched);
std::vector<std::string> verify_schedule(const State& s);

const char* insertion_name(Insertion mode);
Insertion parse_insertion(const std::string& name);
const char* adjacency_name(AdjacencyMode mode);
AdjacencyMode parse_adjacency(const std::string& name);

}  // namespace jssp
