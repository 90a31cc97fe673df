#include <algorithm>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/oracle.hpp"
#include "jssp/rules.hpp"

using namespace jssp;

namespace {

// Exhaustive check: every sequence of dispatch decisions under no-push
// insertion; the best over all of them is the optimum for tiny sizes.
Time enumerate(const State& s) {
  if (s.done()) return s.makespan();
  Time best = std::numeric_limits<Time>::max();
  for (OpId op : s.eligible()) {
    State t = s;
    t.step(op);
    best = std::min(best, enumerate(t));
  }
  return best;
}

}  // namespace

TEST_CASE("oracle examples") {
  auto t = optimal_makespan(fixtures::tiny(), 1000);
  CHECK(t.makespan == 7);
  CHECK(t.proof == Proof::Optimal);

  auto serial = optimal_makespan(make_instance("s", 2, {{0, 1}}, {{5, 7}}), 100);
  CHECK(serial.makespan == 12);
  CHECK(serial.proof == Proof::Optimal);

  auto shared = optimal_makespan(make_instance("m", 1, {{0}, {0}}, {{4}, {6}}), 100);
  CHECK(shared.makespan == 10);
  CHECK(shared.proof == Proof::Optimal);
}

TEST_CASE("node limit") {
  auto r = optimal_makespan(fixtures::tiny(), 1);
  CHECK(r.proof == Proof::LimitHit);
  CHECK(r.makespan >= 7);
  CHECK_THROWS_AS(optimal_makespan(fixtures::tiny(), 0), std::invalid_argument);
  CHECK_THROWS_AS(optimal_makespan(fixtures::tiny(), -5), std::invalid_argument);
}

TEST_CASE("oracle agrees with brute-force enumeration") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int n = 2 + static_cast<int>(seed % 2), m = 2 + static_cast<int>((seed / 2) % 2);
    Instance inst = generate_taillard(n, m, 1, 20, seed);
    auto r = optimal_makespan(inst, 1'000'000);
    REQUIRE(r.proof == Proof::Optimal);
    CHECK(r.makespan == enumerate(reset(inst, Insertion::NoPush)));
  }
}

TEST_CASE("oracle lower-bounds every rule and ignores job order") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Instance inst = generate_taillard(3, 3, 1, 50, 100 + seed);
    auto r = optimal_makespan(inst, 1'000'000);
    REQUIRE(r.proof == Proof::Optimal);
    for (auto mode : {Insertion::Push, Insertion::NoPush})
      for (Rule rule : {Rule::spt(), Rule::mwkr(), Rule::fdd_mwkr(), Rule::mopnr(), Rule::random(seed)})
        CHECK(run_pdr(inst, rule, mode).makespan >= r.makespan);

    std::vector<int> perm(inst.num_jobs);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::vector<std::vector<int>> routes;
    std::vector<std::vector<Time>> times;
    for (int j : perm) {
      routes.push_back(inst.routes[j]);
      times.push_back(inst.proc_times[j]);
    }
    CHECK(optimal_makespan(make_instance("perm", inst.num_machines, routes, times), 1'000'000).makespan ==
          r.makespan);
  }
}
