#pragma once

#include <array>
#include <string>
#include <vector>

#include "jssp/rules.hpp"

namespace jssp {

// Published makespans of SPT, MWKR, FDD/MWKR and MOPNR per instance.
struct PdrTableRow {
  std::string instance_id;
  std::array<Time, 4> makespan{};
};
using PdrTable = std::vector<PdrTableRow>;

// "id spt mwkr fdd-mwkr mopnr" per line; '#' comments.
PdrTable read_pdr_table(const std::string& path);

// The rule order used by PdrTableRow.
std::array<Rule, 4> table_rules();

struct CalibrationEntry {
  std::string instance_id;
  std::string rule;
  Insertion semantics = Insertion::Push;
  Time makespan = 0;
  Time published = 0;
  double deviation = 0.0;  // (makespan - published) / published
};

struct Calibration {
  std::vector<CalibrationEntry> entries;
  double total_abs_deviation_push = 0.0;
  double total_abs_deviation_nopush = 0.0;
  int exact_matches_push = 0;
  int exact_matches_nopush = 0;
  Insertion better = Insertion::Push;
};

// Runs the four rules under both insertion semantics on every instance that
// has a table row. Throws std::invalid_argument for an instance without one.
Calibration calibrate(const std::vector<Instance>& instances, const PdrTable& table);

std::string calibration_csv(const Calibration& c);

}  // namespace jssp
