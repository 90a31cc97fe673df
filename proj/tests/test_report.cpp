#include <filesystem>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/calibrate.hpp"
#include "jssp/gantt.hpp"
#include "jssp/report.hpp"
#include "jssp/rules.hpp"

using namespace jssp;

namespace {

std::string scratch(const std::string& name) {
  std::filesystem::create_directories(JSSP_SCRATCH);
  return std::string(JSSP_SCRATCH) + "/" + name;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("relative gap") {
  CHECK(*relative_gap(1443, 1231) == doctest::Approx(0.1722).epsilon(1e-3));
  CHECK_FALSE(relative_gap(10, std::nullopt).has_value());
}

TEST_CASE("CSV rows and averages") {
  std::vector<EvalReport> rows = {
      {"a", "spt", 10, 0.25, 1.0, Insertion::NoPush},
      {"a", "mwkr", 12, 0.5, 2.0, Insertion::NoPush},
      {"b", "spt", 20, std::nullopt, 3.0, Insertion::NoPush},
  };
  auto avg = method_averages(rows);
  REQUIRE(avg.size() == 2);
  CHECK(avg[0].method == "spt");
  CHECK(avg[0].count == 2);
  CHECK(avg[0].makespan == 15.0);
  CHECK(*avg[0].gap == 0.25);
  CHECK(avg[1].method == "mwkr");

  auto l = lines(reports_csv(rows, false));
  REQUIRE(l.size() == 6);
  CHECK(l[0] == "instance_id,method,semantics,makespan,gap,time_ms");
  CHECK(l[1] == "a,spt,no-push,10,0.250000,");
  CHECK(l[3] == "b,spt,no-push,20,,");
  CHECK(l[4].rfind("AVERAGE,spt,no-push,15.0000,0.250000,", 0) == 0);
  CHECK(reports_csv(rows, false) == reports_csv(rows, false));
  CHECK(lines(reports_csv(rows, true))[1] == "a,spt,no-push,10,0.250000,1.000");

  CHECK(lines(reports_csv({}, true)).size() == 1);
}

TEST_CASE("reference and manifest files") {
  RefTable refs = read_refs(fixtures::data("taillard/refs.txt"));
  CHECK(refs.size() == 10);
  CHECK(*lookup_ref(refs, "ta01") == 1231);
  CHECK_FALSE(lookup_ref(refs, "ta99").has_value());

  const std::string r = scratch("refs.txt");
  write_text_file(r, "# comment\nx 5\n\ny 7  # trailing\n");
  refs = read_refs(r);
  CHECK(refs.size() == 2);
  CHECK(refs["y"] == 7);
  write_text_file(r, "x five\n");
  CHECK_THROWS(read_refs(r));

  auto m = read_manifest(fixtures::data("taillard/manifest.txt"));
  REQUIRE(m.size() == 10);
  CHECK(std::filesystem::exists(m[0]));
  const std::string empty = scratch("empty_manifest.txt");
  write_manifest(empty, {});
  CHECK(read_manifest(empty).empty());
  CHECK_THROWS(read_manifest(scratch("no_such_manifest.txt")));
}

TEST_CASE("schedule JSON round trip") {
  Instance inst = generate_taillard(4, 3, 1, 99, 8);
  Schedule s = extract_schedule(run_pdr(inst, Rule::mwkr()).state);
  auto j = schedule_to_json(s);
  CHECK(j["makespan"].get<Time>() == s.makespan());
  Schedule back = schedule_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.instance_id == s.instance_id);
  REQUIRE(back.ops.size() == s.ops.size());
  for (std::size_t k = 0; k < s.ops.size(); ++k) {
    CHECK(back.ops[k].op == s.ops[k].op);
    CHECK(back.ops[k].start == s.ops[k].start);
    CHECK(back.ops[k].end == s.ops[k].end);
    CHECK(back.ops[k].machine == s.ops[k].machine);
  }
  CHECK(verify_schedule(inst, back).empty());
  CHECK_THROWS_AS(schedule_from_json(nlohmann::json::parse(R"({"ops": 3})")), ScheduleFormatError);
}

TEST_CASE("gantt chart") {
  Schedule s = extract_schedule(run_pdr(fixtures::tiny(), Rule::spt()).state);
  const std::string svg = render_gantt_svg(s);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::regex rect(R"re(<rect [^>]*data-job="(\d+)" data-pos="(\d+)" data-machine="(\d+)" data-start="(\d+)" data-end="(\d+)")re");
  int count = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it, ++count) {
    const auto& m = *it;
    OpId op{std::stoi(m[1]), std::stoi(m[2])};
    bool found = false;
    for (const auto& so : s.ops)
      if (so.op == op) {
        found = true;
        CHECK(so.machine == std::stoi(m[3]));
        CHECK(so.start == std::stol(m[4]));
        CHECK(so.end == std::stol(m[5]));
      }
    CHECK(found);
  }
  CHECK(count == 4);
  CHECK(svg.find(">1.0<") != std::string::npos);

  Schedule empty;
  const std::string blank = render_gantt_svg(empty, 2);
  CHECK(blank.find("<rect ") == std::string::npos);
  CHECK(blank.find("class=\"axes\"") != std::string::npos);
}

TEST_CASE("calibration table") {
  PdrTable table = read_pdr_table(fixtures::data("taillard/pdr_table.txt"));
  REQUIRE(table.size() == 10);
  CHECK(table[0].instance_id == "ta01");
  CHECK(table[0].makespan[0] == 1872);
  Instance ta01 = load_instance_file(fixtures::data("taillard/ta01.txt"), InstanceFormat::Taillard);
  auto c = calibrate({ta01}, table);
  CHECK(c.entries.size() == 8);
  for (const auto& e : c.entries) CHECK(e.deviation == doctest::Approx((e.makespan - e.published) / double(e.published)));
  CHECK(lines(calibration_csv(c)).size() >= 9);
  Instance stray = generate_taillard(2, 2, 1, 9, 1);
  CHECK_THROWS_AS(calibrate({stray}, table), std::invalid_argument);
}
