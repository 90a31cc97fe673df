#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/instance.hpp"
#include "jssp/rng.hpp"

using namespace jssp;

TEST_CASE("standard format parses the tiny instance") {
  Instance t = fixtures::tiny();
  CHECK(t.num_jobs == 2);
  CHECK(t.num_machines == 2);
  CHECK(t.routes == std::vector<std::vector<int>>{{0, 1}, {1, 0}});
  CHECK(t.proc_times == std::vector<std::vector<Time>>{{3, 2}, {2, 4}});
  CHECK(t.release == std::vector<Time>{0, 0});
  CHECK(t.num_ops() == 4);
  CHECK(t.flat(OpId{1, 1}) == 3);
  CHECK(t.op_at(2) == OpId{1, 0});
  CHECK(validate(t).empty());
}

TEST_CASE("taillard format gives the same instance with 1-based machines") {
  Instance t = parse_instance("2 2\n3 2\n2 4\n1 2\n2 1\n", InstanceFormat::Taillard);
  CHECK(t.same_problem(fixtures::tiny()));
}

TEST_CASE("CRLF input is accepted") {
  Instance t = parse_instance("2 2\r\n0 3 1 2\r\n1 2 0 4\r\n", InstanceFormat::Standard);
  CHECK(t.same_problem(fixtures::tiny()));
}

TEST_CASE("parse errors carry position and reason") {
  SUBCASE("machine out of range") {
    try {
      parse_instance("2 2\n0 3 2 2\n1 2 0 4", InstanceFormat::Standard);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("machine id 2 out of range") != std::string::npos);
      CHECK(e.line() == 2);
      CHECK(e.column() == 5);
    }
  }
  SUBCASE("malformed token") {
    CHECK_THROWS_AS(parse_instance("2 2\n0 x 1 2\n1 2 0 4", InstanceFormat::Standard), ParseError);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_WITH(parse_instance("2 2\n0 3 1 2\n", InstanceFormat::Standard),
                      doctest::Contains("dimension mismatch"));
  }
  SUBCASE("taillard route must be a permutation") {
    CHECK_THROWS_WITH(parse_instance("2 2\n3 2\n2 4\n1 1\n2 1\n", InstanceFormat::Taillard),
                      doctest::Contains("not a permutation"));
  }
}

TEST_CASE("validate reports every problem") {
  Instance t = fixtures::tiny();
  t.proc_times[0][1] = 0;
  auto errs = validate(t);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].find("nonpositive duration") != std::string::npos);

  Instance u = fixtures::tiny();
  u.proc_times[1].push_back(5);
  auto errs2 = validate(u);
  REQUIRE(!errs2.empty());
  CHECK(errs2[0].find("dimension mismatch") != std::string::npos);

  CHECK_THROWS_AS(make_instance("x", 2, {{0, 1}}, {{3, 0}}), InstanceError);
}

TEST_CASE("write then parse is the identity") {
  Instance t = fixtures::tiny();
  CHECK(write_instance(t, InstanceFormat::Standard) == "2 2\n0 3 1 2\n1 2 0 4\n");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Instance g = generate_taillard(1 + seed % 7, 1 + (seed / 7) % 6, 1, 99, seed);
    for (auto fmt : {InstanceFormat::Standard, InstanceFormat::Taillard}) {
      Instance back = parse_instance(write_instance(g, fmt), fmt);
      CHECK(back.same_problem(g));
    }
  }
}

TEST_CASE("taillard output needs permutation routes") {
  Instance t = make_instance("short", 2, {{0}, {1, 0}}, {{3}, {2, 4}});
  CHECK_THROWS_AS(write_instance(t, InstanceFormat::Taillard), InstanceError);
  CHECK_NOTHROW(write_instance(t, InstanceFormat::Standard));
}

TEST_CASE("generator shape, range and determinism") {
  Instance g = generate_taillard(6, 6, 1, 99, 5);
  CHECK(g.num_ops() == 36);
  CHECK(has_permutation_routes(g));
  for (const auto& row : g.proc_times)
    for (Time p : row) CHECK((p >= 1 && p <= 99));
  CHECK(generate_taillard(6, 6, 1, 99, 5).same_problem(g));
  CHECK_FALSE(generate_taillard(6, 6, 1, 99, 6).same_problem(g));

  Instance flat = generate_taillard(3, 3, 5, 5, 11);
  for (const auto& row : flat.proc_times)
    for (Time p : row) CHECK(p == 5);

  CHECK_THROWS_AS(generate_taillard(2, 2, 5, 4, 1), InstanceError);
}

TEST_CASE("generator marginals") {
  // 10 instances of 100x100 give 10^5 durations.
  std::vector<long> counts(99, 0);
  long total = 0;
  double sum = 0.0;
  std::vector<long> first_machine(6, 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance g = generate_taillard(100, 100, 1, 99, 1000 + seed);
    for (const auto& row : g.proc_times)
      for (Time p : row) {
        ++counts[p - 1];
        ++total;
        sum += static_cast<double>(p);
      }
  }
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    Instance g = generate_taillard(5, 6, 1, 9, seed);
    for (const auto& r : g.routes) ++first_machine[r[0]];
  }
  CHECK(total == 100000);

  const double mean = sum / static_cast<double>(total);
  CHECK(mean == doctest::Approx(50.0).epsilon(0.03));  // 50 +- 1.5

  const double expected = static_cast<double>(total) / 99.0;
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 133.48);  // df 98, alpha 0.01

  const double e6 = 10000.0 / 6.0;
  double chi2m = 0.0;
  for (long c : first_machine) chi2m += (c - e6) * (c - e6) / e6;
  CHECK(chi2m < 15.09);  // df 5, alpha 0.01
}

TEST_CASE("rng helpers") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const auto v = c.uniform_int(3, 7);
    CHECK((v >= 3 && v <= 7));
    const double u = c.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
  }
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("bundled Taillard instances load") {
  Instance t = load_instance_file(fixtures::data("taillard/ta01.txt"), InstanceFormat::Taillard);
  CHECK(t.id == "ta01");
  CHECK(t.num_jobs == 15);
  CHECK(t.num_machines == 15);
  CHECK(has_permutation_routes(t));
  CHECK(t.proc_times[0][0] == 94);
}
