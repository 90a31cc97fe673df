#include "jssp/instance.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jssp/rng.hpp"

namespace jssp {

void Instance::reindex() {
  offsets_.assign(routes.size() + 1, 0);
  for (std::size_t i = 0; i < routes.size(); ++i)
    offsets_[i + 1] = offsets_[i] + static_cast<int>(routes[i].size());
  ops_.clear();
  for (std::size_t i = 0; i < routes.size(); ++i)
    for (std::size_t k = 0; k < routes[i].size(); ++k)
      ops_.push_back({static_cast<int>(i), static_cast<int>(k)});
}

bool Instance::same_problem(const Instance& o) const {
  return num_jobs == o.num_jobs && num_machines == o.num_machines && routes == o.routes &&
         proc_times == o.proc_times && release == o.release;
}

ParseError::ParseError(const std::string& msg, int line, int column)
    : InstanceError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": " + msg),
      line_(line),
      column_(column) {}

std::vector<std::string> validate(const Instance& inst) {
  std::vector<std::string> errs;
  if (inst.num_jobs < 1) errs.push_back("no jobs");
  if (inst.num_machines < 1) errs.push_back("no machines");
  if (static_cast<int>(inst.routes.size()) != inst.num_jobs ||
      static_cast<int>(inst.proc_times.size()) != inst.num_jobs) {
    errs.push_back("dimension mismatch: expected " + std::to_string(inst.num_jobs) + " jobs");
    return errs;
  }
  if (static_cast<int>(inst.release.size()) != inst.num_jobs)
    errs.push_back("dimension mismatch: release times for " + std::to_string(inst.release.size()) +
                   " jobs");
  for (int i = 0; i < inst.num_jobs; ++i) {
    const auto& r = inst.routes[i];
    const auto& p = inst.proc_times[i];
    const std::string job = "job " + std::to_string(i);
    if (r.size() != p.size()) {
      errs.push_back("dimension mismatch: " + job + " has " + std::to_string(r.size()) +
                     " machines but " + std::to_string(p.size()) + " durations");
      continue;
    }
    if (r.empty()) errs.push_back(job + " has no operations");
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] < 0 || r[j] >= inst.num_machines)
        errs.push_back("machine id " + std::to_string(r[j]) + " out of range in " + job);
      if (p[j] < 1)
        errs.push_back("nonpositive duration " + std::to_string(p[j]) + " in " + job +
                       " operation " + std::to_string(j));
    }
    if (i < static_cast<int>(inst.release.size()) && inst.release[i] < 0)
      errs.push_back("negative release time in " + job);
  }
  return errs;
}

Instance make_instance(std::string id, int num_machines, std::vector<std::vector<int>> routes,
                       std::vector<std::vector<Time>> proc_times, std::vector<Time> release) {
  Instance inst;
  inst.id = std::move(id);
  inst.num_jobs = static_cast<int>(routes.size());
  inst.num_machines = num_machines;
  inst.routes = std::move(routes);
  inst.proc_times = std::move(proc_times);
  inst.release = release.empty() ? std::vector<Time>(inst.num_jobs, 0) : std::move(release);
  auto errs = validate(inst);
  if (!errs.empty()) {
    std::string msg = "invalid instance";
    for (const auto& e : errs) msg += "; " + e;
    throw InstanceError(msg);
  }
  inst.reindex();
  return inst;
}

bool has_permutation_routes(const Instance& inst) {
  for (const auto& r : inst.routes) {
    if (static_cast<int>(r.size()) != inst.num_machines) return false;
    std::vector<char> seen(inst.num_machines, 0);
    for (int m : r) {
      if (m < 0 || m >= inst.num_machines || seen[m]) return false;
      seen[m] = 1;
    }
  }
  return true;
}

namespace {

struct Token {
  std::int64_t value;
  int column;
};

struct Line {
  int number;
  std::vector<Token> tokens;
};

// Splits text into non-empty lines of integer tokens. CR is treated as whitespace.
std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view row = text.substr(pos, eol - pos);
    ++number;
    Line line{number, {}};
    std::size_t i = 0;
    while (i < row.size()) {
      char c = row[i];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < row.size() && row[i] != ' ' && row[i] != '\t' && row[i] != '\r') ++i;
      std::string_view word = row.substr(start, i - start);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
      if (ec != std::errc() || ptr != word.data() + word.size())
        throw ParseError("malformed token '" + std::string(word) + "'", number,
                         static_cast<int>(start) + 1);
      line.tokens.push_back({v, static_cast<int>(start) + 1});
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    pos = eol + 1;
  }
  return lines;
}

std::pair<int, int> parse_header(const std::vector<Line>& lines) {
  if (lines.empty()) throw ParseError("empty input", 1, 1);
  const Line& h = lines[0];
  if (h.tokens.size() != 2)
    throw ParseError("header must be 'num_jobs num_machines'", h.number, 1);
  for (const auto& t : h.tokens)
    if (t.value < 1) throw ParseError("dimensions must be positive", h.number, t.column);
  return {static_cast<int>(h.tokens[0].value), static_cast<int>(h.tokens[1].value)};
}

void check_machine(const Token& t, int num_machines, int line, std::int64_t shown) {
  if (t.value < 0 || t.value >= num_machines)
    throw ParseError("machine id " + std::to_string(shown) + " out of range", line, t.column);
}

void check_duration(const Token& t, int line) {
  if (t.value < 1)
    throw ParseError("nonpositive duration " + std::to_string(t.value), line, t.column);
}

Instance parse_standard(const std::vector<Line>& lines, std::string id) {
  auto [n, m] = parse_header(lines);
  if (static_cast<int>(lines.size()) != n + 1) {
    int at = lines.size() > static_cast<std::size_t>(n) + 1 ? lines[n + 1].number : lines.back().number;
    throw ParseError("dimension mismatch: expected " + std::to_string(n) + " job lines, found " +
                         std::to_string(lines.size() - 1),
                     at, 1);
  }
  std::vector<std::vector<int>> routes(n);
  std::vector<std::vector<Time>> times(n);
  for (int i = 0; i < n; ++i) {
    const Line& l = lines[i + 1];
    if (l.tokens.size() % 2 != 0)
      throw ParseError("dimension mismatch: job line needs 'machine time' pairs", l.number,
                       l.tokens.back().column);
    for (std::size_t k = 0; k < l.tokens.size(); k += 2) {
      check_machine(l.tokens[k], m, l.number, l.tokens[k].value);
      check_duration(l.tokens[k + 1], l.number);
      routes[i].push_back(static_cast<int>(l.tokens[k].value));
      times[i].push_back(l.tokens[k + 1].value);
    }
  }
  return make_instance(std::move(id), m, std::move(routes), std::move(times));
}

Instance parse_taillard(const std::vector<Line>& lines, std::string id) {
  auto [n, m] = parse_header(lines);
  // Flatten the body; rows may be wrapped arbitrarily but we report positions per token.
  struct Cell {
    Token tok;
    int line;
  };
  std::vector<Cell> body;
  for (std::size_t k = 1; k < lines.size(); ++k)
    for (const auto& t : lines[k].tokens) body.push_back({t, lines[k].number});
  const std::size_t expected = 2 * static_cast<std::size_t>(n) * m;
  if (body.size() != expected) {
    const Line& last = lines.back();
    throw ParseError("dimension mismatch: expected " + std::to_string(expected) +
                         " matrix entries, found " + std::to_string(body.size()),
                     last.number, last.tokens.back().column);
  }
  std::vector<std::vector<int>> routes(n, std::vector<int>(m));
  std::vector<std::vector<Time>> times(n, std::vector<Time>(m));
  const std::size_t half = static_cast<std::size_t>(n) * m;
  for (int i = 0; i < n; ++i) {
    std::vector<char> seen(m, 0);
    for (int j = 0; j < m; ++j) {
      const Cell& tc = body[static_cast<std::size_t>(i) * m + j];
      check_duration(tc.tok, tc.line);
      times[i][j] = tc.tok.value;
      const Cell& mc = body[half + static_cast<std::size_t>(i) * m + j];
      Token zero_based{mc.tok.value - 1, mc.tok.column};
      check_machine(zero_based, m, mc.line, mc.tok.value);
      int machine = static_cast<int>(zero_based.value);
      if (seen[machine])
        throw ParseError("route of job " + std::to_string(i) + " is not a permutation (machine " +
                             std::to_string(mc.tok.value) + " repeated)",
                         mc.line, mc.tok.column);
      seen[machine] = 1;
      routes[i][j] = machine;
    }
  }
  return make_instance(std::move(id), m, std::move(routes), std::move(times));
}

}  // namespace

Instance parse_instance(std::string_view text, InstanceFormat format, std::string id) {
  auto lines = tokenize(text);
  return format == InstanceFormat::Standard ? parse_standard(lines, std::move(id))
                                            : parse_taillard(lines, std::move(id));
}

std::string write_instance(const Instance& inst, InstanceFormat format) {
  std::ostringstream out;
  out << inst.num_jobs << ' ' << inst.num_machines << '\n';
  if (format == InstanceFormat::Standard) {
    for (int i = 0; i < inst.num_jobs; ++i) {
      for (std::size_t j = 0; j < inst.routes[i].size(); ++j) {
        if (j) out << ' ';
        out << inst.routes[i][j] << ' ' << inst.proc_times[i][j];
      }
      out << '\n';
    }
    return out.str();
  }
  if (!has_permutation_routes(inst))
    throw InstanceError("Taillard format requires every route to be a permutation of all machines");
  for (const auto& row : inst.proc_times) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  for (const auto& row : inst.routes) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j] + 1;
    out << '\n';
  }
  return out.str();
}

Instance generate_taillard(int num_jobs, int num_machines, Time lo, Time hi, std::uint64_t seed) {
  if (num_jobs < 1 || num_machines < 1) throw InstanceError("dimensions must be positive");
  if (lo < 1 || lo > hi) throw InstanceError("duration range must satisfy 1 <= lo <= hi");
  Rng rng(seed);
  std::vector<std::vector<Time>> times(num_jobs, std::vector<Time>(num_machines));
  std::vector<std::vector<int>> routes(num_jobs, std::vector<int>(num_machines));
  for (auto& row : times)
    for (auto& p : row) p = rng.uniform_int(lo, hi);
  for (auto& row : routes) {
    std::iota(row.begin(), row.end(), 0);
    for (int k = num_machines - 1; k > 0; --k)
      std::swap(row[k], row[static_cast<std::size_t>(rng.uniform_int(0, k))]);
  }
  std::string id = "tai" + std::to_string(num_jobs) + "x" + std::to_string(num_machines) + "_" +
                   std::to_string(seed);
  return make_instance(std::move(id), num_machines, std::move(routes), std::move(times));
}

InstanceFormat parse_format_name(std::string_view name) {
  if (name == "standard") return InstanceFormat::Standard;
  if (name == "taillard") return InstanceFormat::Taillard;
  throw std::invalid_argument("unknown instance format '" + std::string(name) +
                              "' (expected standard or taillard)");
}

Instance load_instance_file(const std::string& path, InstanceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string id = path;
  if (auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
  if (auto dot = id.find_last_of('.'); dot != std::string::npos) id = id.substr(0, dot);
  return parse_instance(buf.str(), format, id);
}

}  // namespace jssp
