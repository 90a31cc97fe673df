#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/rules.hpp"

using namespace jssp;

TEST_CASE("priorities on the tiny instance") {
  State s = reset(fixtures::tiny());
  CHECK(priority(Rule::spt(), s, {0, 0}) == 3.0);
  CHECK(priority(Rule::spt(), s, {1, 0}) == 2.0);
  CHECK(priority(Rule::mwkr(), s, {0, 0}) == -5.0);
  CHECK(priority(Rule::mwkr(), s, {1, 0}) == -6.0);
  CHECK(priority(Rule::fdd_mwkr(), s, {0, 0}) == doctest::Approx(3.0 / 5.0));
  CHECK(priority(Rule::mopnr(), s, {0, 0}) == -2.0);
  CHECK_THROWS_AS(priority(Rule::spt(), s, {0, 1}), std::invalid_argument);
}

TEST_CASE("MOPNR counts remaining operations") {
  Instance six = generate_taillard(1, 6, 1, 9, 4);
  CHECK(priority(Rule::mopnr(), reset(six), {0, 0}) == -6.0);
}

TEST_CASE("tiny instance makespans") {
  CHECK(run_pdr(fixtures::tiny(), Rule::spt()).makespan == 7);
  CHECK(run_pdr(fixtures::tiny(), Rule::mwkr()).makespan == 7);
  auto r = run_pdr(fixtures::tiny(), Rule::spt());
  CHECK(r.state.start(2) == 0);
  CHECK(r.state.start(0) == 0);
  CHECK(r.state.start(1) == 3);
  CHECK(r.state.start(3) == 3);
}

TEST_CASE("rules are deterministic and feasible") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Instance inst = generate_taillard(4 + seed % 5, 3 + seed % 4, 1, 99, seed);
    for (auto mode : {Insertion::Push, Insertion::NoPush})
      for (Rule rule : {Rule::spt(), Rule::mwkr(), Rule::fdd_mwkr(), Rule::mopnr(), Rule::random(seed)}) {
        auto a = run_pdr(inst, rule, mode);
        auto b = run_pdr(inst, rule, mode);
        CHECK(a.makespan == b.makespan);
        CHECK(extract_schedule(a.state).ops.size() == static_cast<std::size_t>(inst.num_ops()));
        for (int v = 0; v < inst.num_ops(); ++v) CHECK(a.state.start(v) == b.state.start(v));
        CHECK(verify_schedule(a.state).empty());
      }
  }
}

TEST_CASE("SPT on one machine sorts by duration, ties to the lower job") {
  Instance inst = make_instance("one", 1, {{0}, {0}, {0}, {0}}, {{5}, {2}, {5}, {1}});
  auto r = run_pdr(inst, Rule::spt());
  CHECK(r.state.machine_sequences()[0] == std::vector<int>{3, 1, 0, 2});
  CHECK(r.makespan == 13);
}

TEST_CASE("random rule depends on its seed") {
  Instance inst = generate_taillard(8, 8, 1, 99, 77);
  std::set<Time> seen;
  for (std::uint64_t s = 0; s < 10; ++s) seen.insert(run_pdr(inst, Rule::random(s)).makespan);
  CHECK(seen.size() > 1);
}

TEST_CASE("rule names") {
  CHECK(rule_name(parse_rule("fdd-mwkr")) == "fdd-mwkr");
  CHECK(parse_rule("fdd/mwkr").kind == Rule::Kind::FDDMWKR);
  CHECK(parse_rule("random", 9).seed == 9);
  CHECK_THROWS_AS(parse_rule("lpt"), std::invalid_argument);
}
