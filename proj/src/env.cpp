#include "jssp/env.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>

namespace jssp {

State::State(std::shared_ptr<const Instance> inst, Insertion mode)
    : inst_(std::move(inst)), mode_(mode) {
  const int n = inst_->num_ops();
  scheduled_.assign(n, 0);
  start_.assign(n, -1);
  clb_.assign(n, 0);
  machine_seq_.assign(inst_->num_machines, {});
  next_pos_.assign(inst_->num_jobs, 0);
  recompute_bounds();
}

State reset(const Instance& inst, Insertion mode) {
  return State(std::make_shared<const Instance>(inst), mode);
}

State reset(std::shared_ptr<const Instance> inst, Insertion mode) {
  return State(std::move(inst), mode);
}

Time State::end(int flat) const {
  return start_[flat] + inst_->duration(inst_->op_at(flat));
}

std::vector<OpId> State::eligible() const {
  std::vector<OpId> out;
  for (int j = 0; j < inst_->num_jobs; ++j)
    if (next_pos_[j] < inst_->ops_in_job(j)) out.push_back({j, next_pos_[j]});
  return out;
}

bool State::is_eligible(OpId op) const {
  return op.job >= 0 && op.job < inst_->num_jobs && op.pos == next_pos_[op.job] &&
         op.pos < inst_->ops_in_job(op.job);
}

StepOutcome State::step(OpId op) {
  if (!is_eligible(op))
    throw std::invalid_argument("ineligible action (job " + std::to_string(op.job) + ", pos " +
                                std::to_string(op.pos) + ")");
  const Instance& inst = *inst_;
  const int a = inst.flat(op);
  const Time p = inst.duration(op);
  const Time ready = op.pos > 0 ? end(a - 1) : inst.release[op.job];

  auto& seq = machine_seq_[inst.machine(op)];
  std::size_t k = 0;
  for (; k < seq.size(); ++k) {
    const Time prev_end = k > 0 ? end(seq[k - 1]) : 0;
    const Time earliest = std::max(ready, prev_end);
    const bool fits = mode_ == Insertion::Push ? earliest < start_[seq[k]]
                                               : earliest + p <= start_[seq[k]];
    if (fits) break;
  }
  const Time prev_end = k > 0 ? end(seq[k - 1]) : 0;
  seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(k), a);
  scheduled_[a] = 1;
  start_[a] = std::max(ready, prev_end);
  ++next_pos_[op.job];
  ++steps_;

  StepOutcome out;
  out.h_before = h_;
  recompute_starts();
  recompute_bounds();
  out.h_after = h_;
  out.reward = out.h_before - out.h_after;
  out.done = done();
  return out;
}

// Kahn's algorithm over the scheduled part of the graph. Every scheduled
// operation's job predecessor is scheduled too, so the only edges are the
// job arc and the machine arc into each node.
void State::recompute_starts() {
  const Instance& inst = *inst_;
  const int n = inst.num_ops();
  std::vector<int> mpred(n, -1), msucc(n, -1);
  for (const auto& seq : machine_seq_)
    for (std::size_t k = 1; k < seq.size(); ++k) {
      mpred[seq[k]] = seq[k - 1];
      msucc[seq[k - 1]] = seq[k];
    }
  std::vector<int> indeg(n, 0);
  std::deque<int> ready;
  int total = 0;
  for (int v = 0; v < n; ++v) {
    if (!scheduled_[v]) continue;
    ++total;
    OpId o = inst.op_at(v);
    indeg[v] = (o.pos > 0 ? 1 : 0) + (mpred[v] >= 0 ? 1 : 0);
    if (indeg[v] == 0) ready.push_back(v);
  }
  int processed = 0;
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    ++processed;
    OpId o = inst.op_at(v);
    Time s = inst.release[o.job];
    if (o.pos > 0) s = std::max(s, end(v - 1));
    if (mpred[v] >= 0) s = std::max(s, end(mpred[v]));
    start_[v] = s;
    auto release_edge = [&](int w) {
      if (w >= 0 && scheduled_[w] && --indeg[w] == 0) ready.push_back(w);
    };
    if (o.pos + 1 < inst.ops_in_job(o.job)) release_edge(v + 1);
    release_edge(msucc[v]);
  }
  if (processed != total) throw std::logic_error("cycle in partial schedule graph");
}

void State::recompute_bounds() {
  const Instance& inst = *inst_;
  h_ = 0;
  for (int j = 0; j < inst.num_jobs; ++j) {
    Time prev = inst.release[j];
    for (int k = 0; k < inst.ops_in_job(j); ++k) {
      const int v = inst.flat(j, k);
      clb_[v] = scheduled_[v] ? start_[v] + inst.proc_times[j][k] : prev + inst.proc_times[j][k];
      prev = clb_[v];
      h_ = std::max(h_, clb_[v]);
    }
  }
}

Time State::makespan() const {
  if (!done()) throw std::logic_error("makespan of a non-terminal state");
  Time m = 0;
  for (int v = 0; v < inst_->num_ops(); ++v) m = std::max(m, end(v));
  return m;
}

namespace {

// Arcs of the graph formed by conjunctions and machine orders, weighted by
// the tail's processing time. Returns longest source distance per scheduled
// node via memoized DFS.
std::vector<Time> longest_paths(const State& s) {
  const Instance& inst = s.instance();
  const int n = inst.num_ops();
  std::vector<std::vector<int>> preds(n);
  for (int v = 0; v < n; ++v) {
    OpId o = inst.op_at(v);
    if (o.pos > 0 && s.scheduled(v)) preds[v].push_back(v - 1);
  }
  for (const auto& seq : s.machine_sequences())
    for (std::size_t k = 1; k < seq.size(); ++k) preds[seq[k]].push_back(seq[k - 1]);

  std::vector<Time> dist(n, -1);
  std::vector<char> colour(n, 0);  // 0 new, 1 on stack, 2 done
  for (int root = 0; root < n; ++root) {
    if (!s.scheduled(root) || colour[root] == 2) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < preds[v].size()) {
        int u = preds[v][next++];
        if (colour[u] == 1) throw std::logic_error("cycle detected in schedule graph");
        if (colour[u] == 0) {
          colour[u] = 1;
          stack.push_back({u, 0});
        }
        continue;
      }
      Time d = inst.release[inst.op_at(v).job];
      for (int u : preds[v]) d = std::max(d, dist[u] + inst.duration(inst.op_at(u)));
      dist[v] = d;
      colour[v] = 2;
      stack.pop_back();
    }
  }
  return dist;
}

}  // namespace

std::vector<Time> longest_path_starts(const State& s) { return longest_paths(s); }

Time critical_path_makespan(const State& s) {
  if (!s.done()) throw std::logic_error("critical path of a non-terminal state");
  const Instance& inst = s.instance();
  auto dist = longest_paths(s);
  Time best = 0;
  for (int v = 0; v < inst.num_ops(); ++v)
    best = std::max(best, dist[v] + inst.duration(inst.op_at(v)));
  return best;
}

Tensor node_features(const State& s, double scale) {
  if (!(scale > 0)) throw std::invalid_argument("feature scale must be positive");
  const int n = s.instance().num_ops();
  Tensor f(static_cast<std::size_t>(n), 2);
  for (int v = 0; v < n; ++v) {
    f(v, 0) = s.scheduled(v) ? 1.0 : 0.0;
    f(v, 1) = static_cast<double>(s.clb(v)) / scale;
  }
  return f;
}

Adjacency adjacency(const State& s, AdjacencyMode mode) {
  const Instance& inst = s.instance();
  const int n = inst.num_ops();
  Adjacency adj(n);
  for (int v = 0; v < n; ++v)
    if (inst.op_at(v).pos > 0) adj[v].push_back(v - 1);
  for (const auto& seq : s.machine_sequences())
    for (std::size_t k = 1; k < seq.size(); ++k) adj[seq[k]].push_back(seq[k - 1]);
  if (mode == AdjacencyMode::RemovingArc) {
    std::vector<std::vector<int>> on_machine(inst.num_machines);
    for (int v = 0; v < n; ++v) on_machine[inst.machine(inst.op_at(v))].push_back(v);
    for (const auto& ops : on_machine)
      for (std::size_t x = 0; x < ops.size(); ++x)
        for (std::size_t y = x + 1; y < ops.size(); ++y) {
          int u = ops[x], v = ops[y];
          if (s.scheduled(u) && s.scheduled(v)) continue;  // decided
          adj[v].push_back(u);
          adj[u].push_back(v);
        }
  }
  for (auto& in : adj) {
    std::sort(in.begin(), in.end());
    in.erase(std::unique(in.begin(), in.end()), in.end());
  }
  return adj;
}

std::size_t arc_count(const Adjacency& adj) {
  std::size_t c = 0;
  for (const auto& in : adj) c += in.size();
  return c;
}

Time Schedule::makespan() const {
  Time m = 0;
  for (const auto& o : ops) m = std::max(m, o.end);
  return m;
}

Schedule extract_schedule(const State& s) {
  const Instance& inst = s.instance();
  Schedule out;
  out.instance_id = inst.id;
  for (int v = 0; v < inst.num_ops(); ++v) {
    if (!s.scheduled(v)) continue;
    OpId o = inst.op_at(v);
    out.ops.push_back({o, inst.machine(o), s.start(v), s.end(v)});
  }
  return out;
}

std::vector<std::string> verify_schedule(const Instance& inst, const Schedule& sched) {
  std::vector<std::string> errs;
  const int n = inst.num_ops();
  std::vector<const ScheduledOp*> by_flat(n, nullptr);
  auto name = [](OpId o) { return "O(" + std::to_string(o.job) + "," + std::to_string(o.pos) + ")"; };
  for (const auto& so : sched.ops) {
    if (so.op.job < 0 || so.op.job >= inst.num_jobs || so.op.pos < 0 ||
        so.op.pos >= inst.ops_in_job(so.op.job)) {
      errs.push_back("unknown operation " + name(so.op));
      continue;
    }
    const int v = inst.flat(so.op);
    if (by_flat[v]) errs.push_back("operation " + name(so.op) + " scheduled twice");
    by_flat[v] = &so;
    if (so.start < 0) errs.push_back("negative start for " + name(so.op));
    if (so.machine != inst.machine(so.op)) errs.push_back("wrong machine for " + name(so.op));
    if (so.end - so.start != inst.duration(so.op))
      errs.push_back("duration mismatch for " + name(so.op));
    if (so.start < inst.release[so.op.job]) errs.push_back("release time violated by " + name(so.op));
  }
  for (int v = 0; v < n; ++v)
    if (!by_flat[v]) errs.push_back("operation " + name(inst.op_at(v)) + " not scheduled");
  for (int v = 0; v < n; ++v) {
    OpId o = inst.op_at(v);
    if (o.pos == 0 || !by_flat[v] || !by_flat[v - 1]) continue;
    if (by_flat[v]->start < by_flat[v - 1]->end)
      errs.push_back("precedence violated: " + name(o) + " starts before its job predecessor ends");
  }
  std::map<int, std::vector<const ScheduledOp*>> per_machine;
  for (const auto& so : sched.ops) per_machine[so.machine].push_back(&so);
  for (auto& [m, ops] : per_machine) {
    std::sort(ops.begin(), ops.end(), [](auto* a, auto* b) {
      return a->start != b->start ? a->start < b->start : a->end < b->end;
    });
    for (std::size_t k = 1; k < ops.size(); ++k)
      if (ops[k]->start < ops[k - 1]->end)
        errs.push_back("machine overlap on machine " + std::to_string(m) + " between " +
                       name(ops[k - 1]->op) + " and " + name(ops[k]->op));
  }
  return errs;
}

std::vector<std::string> verify_schedule(const State& s) {
  return verify_schedule(s.instance(), extract_schedule(s));
}

const char* insertion_name(Insertion mode) {
  return mode == Insertion::Push ? "push" : "no-push";
}

Insertion parse_insertion(const std::string& name) {
  if (name == "push") return Insertion::Push;
  if (name == "no-push" || name == "nopush") return Insertion::NoPush;
  throw std::invalid_argument("unknown semantics '" + name + "' (expected push or no-push)");
}

const char* adjacency_name(AdjacencyMode mode) {
  return mode == AdjacencyMode::AddingArc ? "adding-arc" : "removing-arc";
}

AdjacencyMode parse_adjacency(const std::string& name) {
  if (name == "adding-arc" || name == "adding") return AdjacencyMode::AddingArc;
  if (name == "removing-arc" || name == "removing") return AdjacencyMode::RemovingArc;
  throw std::invalid_argument("unknown adjacency mode '" + name +
                              "' (expected adding-arc or removing-arc)");
}

}  // namespace jssp
