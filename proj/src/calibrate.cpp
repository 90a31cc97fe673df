#include "jssp/calibrate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "jssp/report.hpp"

namespace jssp {

PdrTable read_pdr_table(const std::string& path) {
  std::istringstream in(read_text_file(path));
  PdrTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    PdrTableRow row;
    if (!(ls >> row.instance_id)) continue;
    for (auto& v : row.makespan)
      if (!(ls >> v) || v <= 0)
        throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": expected id and four makespans");
    table.push_back(row);
  }
  return table;
}

std::array<Rule, 4> table_rules() { return {Rule::spt(), Rule::mwkr(), Rule::fdd_mwkr(), Rule::mopnr()}; }

Calibration calibrate(const std::vector<Instance>& instances, const PdrTable& table) {
  Calibration c;
  const auto rules = table_rules();
  for (Insertion sem : {Insertion::Push, Insertion::NoPush}) {
    for (const auto& inst : instances) {
      const PdrTableRow* row = nullptr;
      for (const auto& r : table)
        if (r.instance_id == inst.id) row = &r;
      if (!row) throw std::invalid_argument("no published makespans for " + inst.id);
      for (std::size_t k = 0; k < rules.size(); ++k) {
        const Time mk = run_pdr(inst, rules[k], sem).makespan;
        const Time pub = row->makespan[k];
        const double dev = static_cast<double>(mk - pub) / static_cast<double>(pub);
        c.entries.push_back({inst.id, rule_name(rules[k]), sem, mk, pub, dev});
        if (sem == Insertion::Push) {
          c.total_abs_deviation_push += std::abs(dev);
          c.exact_matches_push += mk == pub;
        } else {
          c.total_abs_deviation_nopush += std::abs(dev);
          c.exact_matches_nopush += mk == pub;
        }
      }
    }
  }
  c.better = c.total_abs_deviation_nopush < c.total_abs_deviation_push ? Insertion::NoPush : Insertion::Push;
  return c;
}

std::string calibration_csv(const Calibration& c) {
  std::ostringstream out;
  char buf[64];
  out << "instance_id,rule,semantics,makespan,published,deviation\n";
  for (const auto& e : c.entries) {
    std::snprintf(buf, sizeof buf, "%.6f", e.deviation);
    out << e.instance_id << ',' << e.rule << ',' << insertion_name(e.semantics) << ',' << e.makespan << ','
        << e.published << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.6f", c.total_abs_deviation_push);
  out << "# total |deviation| push " << buf << ", exact matches " << c.exact_matches_push << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", c.total_abs_deviation_nopush);
  out << "# total |deviation| no-push " << buf << ", exact matches " << c.exact_matches_nopush << '\n';
  out << "# better semantics: " << insertion_name(c.better) << '\n';
  return out.str();
}

}  // namespace jssp
