#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jssp/env.hpp"

namespace jssp {

struct EvalReport {
  std::string instance_id;
  std::string method;
  Time makespan = 0;
  std::optional<double> gap;  // (makespan - ref) / ref, only when a reference exists
  double time_ms = 0.0;
  Insertion semantics = Insertion::Push;
};

std::optional<double> relative_gap(Time makespan, std::optional<Time> ref);

struct MethodAverage {
  std::string method;
  Insertion semantics = Insertion::Push;
  std::size_t count = 0;
  double makespan = 0.0;
  std::optional<double> gap;  // over rows that have one
  double time_ms = 0.0;
};

// One entry per (method, semantics) in order of first appearance.
std::vector<MethodAverage> method_averages(const std::vector<EvalReport>& rows);

// instance_id,method,semantics,makespan,gap,time_ms followed by one
// "AVERAGE" row per method. with_time=false blanks the timing column so
// output is reproducible byte for byte.
std::string reports_csv(const std::vector<EvalReport>& rows, bool with_time = true);

// "instance_id value" per line; '#' starts a comment.
using RefTable = std::map<std::string, Time>;
RefTable read_refs(const std::string& path);
std::optional<Time> lookup_ref(const RefTable& refs, const std::string& id);

// One instance path per line, relative paths resolved against the manifest's directory.
std::vector<std::string> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<std::string>& entries);

class ScheduleFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// {"instance": id, "makespan": t, "ops": [{"op": [job, pos], "machine", "start", "end"}]}
nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace jssp
