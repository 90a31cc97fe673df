#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace jssp {

using Time = std::int64_t;

// An operation, addressed by job and position within the job's route.
struct OpId {
  int job = 0;
  int pos = 0;
  friend bool operator==(const OpId&, const OpId&) = default;
};

// A job-shop problem. Treated as immutable once built: every component
// holds it by const reference or shared_ptr<const Instance>.
struct Instance {
  std::string id;
  int num_jobs = 0;
  int num_machines = 0;
  std::vector<std::vector<int>> routes;        // machine index per operation
  std::vector<std::vector<Time>> proc_times;   // duration per operation
  std::vector<Time> release;                   // per job, usually 0

  int num_ops() const { return static_cast<int>(offsets_.empty() ? 0 : offsets_.back()); }
  int ops_in_job(int job) const { return static_cast<int>(routes[job].size()); }
  int flat(OpId op) const { return offsets_[op.job] + op.pos; }
  int flat(int job, int pos) const { return offsets_[job] + pos; }
  OpId op_at(int flat_index) const { return ops_[flat_index]; }
  int machine(OpId op) const { return routes[op.job][op.pos]; }
  Time duration(OpId op) const { return proc_times[op.job][op.pos]; }

  // Recomputes the flat-index table. Called by make_instance; call it again
  // after editing routes by hand.
  void reindex();

  // Equality on problem content (id excluded).
  bool same_problem(const Instance& other) const;

 private:
  std::vector<int> offsets_;  // size num_jobs + 1
  std::vector<OpId> ops_;     // flat index -> (job, pos)
};

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the text parsers; carries 1-based line/column of the offending token.
class ParseError : public InstanceError {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class InstanceFormat { Standard, Taillard };

// Builds an instance and checks it. Throws InstanceError listing every violation.
Instance make_instance(std::string id, int num_machines, std::vector<std::vector<int>> routes,
                       std::vector<std::vector<Time>> proc_times, std::vector<Time> release = {});

// All invariant violations; empty when the instance is valid.
std::vector<std::string> validate(const Instance& inst);

Instance parse_instance(std::string_view text, InstanceFormat format, std::string id = "");
std::string write_instance(const Instance& inst, InstanceFormat format);

// True when every job visits every machine exactly once.
bool has_permutation_routes(const Instance& inst);

// Random instance by Taillard's method: each route an independent uniform
// permutation of the machines, each duration uniform on {lo..hi}.
Instance generate_taillard(int num_jobs, int num_machines, Time lo, Time hi, std::uint64_t seed);

InstanceFormat parse_format_name(std::string_view name);
Instance load_instance_file(const std::string& path, InstanceFormat format);

}  // namespace jssp
