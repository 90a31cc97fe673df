#include "jssp/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace jssp {

using nlohmann::json;

std::optional<double> relative_gap(Time makespan, std::optional<Time> ref) {
  if (!ref || *ref <= 0) return std::nullopt;
  return static_cast<double>(makespan - *ref) / static_cast<double>(*ref);
}

std::vector<MethodAverage> method_averages(const std::vector<EvalReport>& rows) {
  std::vector<MethodAverage> out;
  std::vector<std::size_t> gap_counts;
  for (const auto& r : rows) {
    std::size_t k = 0;
    while (k < out.size() && !(out[k].method == r.method && out[k].semantics == r.semantics)) ++k;
    if (k == out.size()) {
      out.push_back({r.method, r.semantics, 0, 0.0, std::nullopt, 0.0});
      gap_counts.push_back(0);
    }
    MethodAverage& a = out[k];
    ++a.count;
    a.makespan += static_cast<double>(r.makespan);
    a.time_ms += r.time_ms;
    if (r.gap) {
      a.gap = a.gap.value_or(0.0) + *r.gap;
      ++gap_counts[k];
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double n = static_cast<double>(out[k].count);
    out[k].makespan /= n;
    out[k].time_ms /= n;
    if (out[k].gap) *out[k].gap /= static_cast<double>(gap_counts[k]);
  }
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string reports_csv(const std::vector<EvalReport>& rows, bool with_time) {
  std::ostringstream out;
  out << "instance_id,method,semantics,makespan,gap,time_ms\n";
  for (const auto& r : rows) {
    out << r.instance_id << ',' << r.method << ',' << insertion_name(r.semantics) << ',' << r.makespan << ','
        << (r.gap ? fmt("%.6f", *r.gap) : "") << ',' << (with_time ? fmt("%.3f", r.time_ms) : "") << '\n';
  }
  for (const auto& a : method_averages(rows)) {
    out << "AVERAGE," << a.method << ',' << insertion_name(a.semantics) << ',' << fmt("%.4f", a.makespan) << ','
        << (a.gap ? fmt("%.6f", *a.gap) : "") << ',' << (with_time ? fmt("%.3f", a.time_ms) : "") << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

RefTable read_refs(const std::string& path) {
  std::istringstream in(read_text_file(path));
  RefTable refs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) continue;
    long long v = 0;
    std::string extra;
    if (!(ls >> v) || (ls >> extra) || v <= 0)
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": expected 'instance_id positive_value'");
    refs[id] = v;
  }
  return refs;
}

std::optional<Time> lookup_ref(const RefTable& refs, const std::string& id) {
  auto it = refs.find(id);
  if (it == refs.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::istringstream in(read_text_file(path));
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    std::filesystem::path p(line.substr(b));
    out.push_back((p.is_absolute() ? p : base / p).string());
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<std::string>& entries) {
  std::string text;
  for (const auto& e : entries) text += e + "\n";
  write_text_file(path, text);
}

json schedule_to_json(const Schedule& s) {
  json ops = json::array();
  for (const auto& o : s.ops)
    ops.push_back({{"op", {o.op.job, o.op.pos}}, {"machine", o.machine}, {"start", o.start}, {"end", o.end}});
  return {{"instance", s.instance_id}, {"makespan", s.makespan()}, {"ops", ops}};
}

Schedule schedule_from_json(const json& j) {
  try {
    Schedule s;
    if (!j.is_object()) throw ScheduleFormatError("schedule must be a JSON object");
    s.instance_id = j.value("instance", std::string());
    for (const auto& o : j.at("ops")) {
      ScheduledOp op;
      const auto& id = o.at("op");
      if (!id.is_array() || id.size() != 2) throw ScheduleFormatError("\"op\" must be [job, pos]");
      op.op = {id[0].get<int>(), id[1].get<int>()};
      op.machine = o.at("machine").get<int>();
      op.start = o.at("start").get<Time>();
      op.end = o.at("end").get<Time>();
      if (op.machine < 0 || op.op.job < 0 || op.op.pos < 0) throw ScheduleFormatError("negative index in schedule");
      if (op.end < op.start) throw ScheduleFormatError("operation ends before it starts");
      s.ops.push_back(op);
    }
    return s;
  } catch (const json::exception& e) {
    throw ScheduleFormatError(std::string("malformed schedule: ") + e.what());
  }
}

}  // namespace jssp
