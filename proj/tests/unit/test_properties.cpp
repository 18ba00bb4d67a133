#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace albdg;

TEST_CASE("random coefficients are portable") {
  const Mat a = random_coefficients(42, 3, 2);
  const Mat b = random_coefficients(42, 3, 2);
  CHECK(a == b);
  CHECK(a.maxCoeff() < 1.0);
  CHECK(a.minCoeff() >= -1.0);
  std::mt19937_64 rng(42);
  CHECK(a(0, 0) == 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
}

TEST_CASE("lifting bound and coercivity on a polynomial family") {
  const auto p = testing::two_well_problem();
  const auto mesh = p.mesh();
  const auto fam = polynomial_family(mesh, 6);
  const auto lift = check_lifting_bound(mesh, fam, 30, 3);
  CHECK(lift.pass);
  CHECK(lift.max_violation <= 1e-8);
  const auto coer = check_coercivity(mesh, fam, 30, 3);
  CHECK(coer.pass);
  const auto neg = check_coercivity(mesh, fam, 30, 3, {0.1, 1e-3, true});
  CHECK(neg.pass);
  CHECK(neg.max_violation > 0.0);
  CHECK(check_lifting_bound(mesh, fam, 30, 3).to_json().dump() == lift.to_json().dump());
}

TEST_CASE("periodic single-element family has no jumps to lift") {
  const auto p = testing::free_problem(1, 1, 5.0);
  const auto mesh = p.mesh();
  const auto fam = build_alb_family(mesh, Vec::Zero(64), {5});
  const auto r = check_lifting_bound(mesh, fam, 10, 1);
  CHECK(r.pass);
  CHECK(r.skipped == 10);
}

TEST_CASE("reliability on an exactly resolved problem switches to the floor") {
  const auto p = testing::free_problem(4, 3);
  const auto oracle = problem_oracle(p, 2);
  std::vector<ReliabilityRung> rungs;
  const auto r = check_reliability(p, {9, 11}, oracle, {}, &rungs);
  CHECK(r.pass);
  CHECK(r.skipped >= 1);
  CHECK(rungs.size() == 2);
}
