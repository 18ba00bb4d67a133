#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace albdg;
using Catch::Approx;

TEST_CASE("exact eigenfunctions on a single periodic element give a zero estimator") {
  Problem p;
  p.domain = Domain{1, {5.0}, {64}};
  p.element_counts = {1};
  p.lgl_orders = {40};
  p.potential.constant_shift = -0.4;
  p.potential.electrons = 3;
  const auto s = solve_fixed(p.mesh(), p, {5});
  CHECK(s.report.global <= 1e-12);
  for (Eigen::Index e = 0; e < s.report.element.size(); ++e) CHECK(s.report.total(0, e) <= 1e-14);
}

TEST_CASE("empty elements contribute nothing") {
  const auto p = testing::two_well_problem(1);
  const auto s = solve_fixed(p.mesh(), p, {0, 14, 14, 0});
  CHECK(s.report.residual(0, 0) == 0.0);
  CHECK(s.report.residual(0, 3) == 0.0);
  CHECK(s.report.global > 0.0);
}

TEST_CASE("residual term matches an analytic-potential quadrature") {
  const auto p = testing::two_well_problem(2);
  const auto mesh = p.mesh();
  const auto s = solve_fixed(mesh, p, {10, 10, 10, 10});
  const double l = p.domain.lengths[0];
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec x = testing::node_coords(mesh, e);
    Vec v(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      double sum = 0.0;
      for (const auto& w : p.potential.wells)
        for (int m = -3; m <= 3; ++m) {
          const double r = x[k] - w.center[0] - m * l;
          sum += w.depth * std::exp(-r * r / (2 * w.width * w.width));
        }
      v[k] = -sum + s.scf.shift;
    }
    const auto& b = s.scf.family.elements[static_cast<std::size_t>(e)];
    for (int i = 0; i < 2; ++i) {
      const Vec c = s.scf.solution.coefficients.col(i).segment(s.scf.family.offsets[static_cast<std::size_t>(e)], b.count());
      const Vec u = b.values * c;
      const Vec r = -0.5 * (b.laplacians * c) + v.cwiseProduct(u) - s.scf.solution.eigenvalues[i] * u;
      const double expect = s.constants.gamma1[static_cast<std::size_t>(e)] * mesh.element_weights.dot(r.cwiseAbs2());
      CHECK(s.report.residual(i, e) == Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("face terms vanish for globally smooth functions") {
  const auto mesh = build_mesh(Domain{1, {3.0}, {30}}, {3}, {8});
  const auto fam = testing::broken_constants(mesh, {1, 1, 1});
  EigenSolution sol;
  sol.eigenvalues = Vec::Zero(1);
  sol.coefficients = Vec::Ones(3);
  const auto pv = penalty_values(mesh, {1, 1, 1}, PenaltyConfig{});
  const auto c = estimator_constants(mesh, {1, 1, 1}, pv);
  for (int e = 0; e < 3; ++e) {
    const auto [g, v] = face_terms(mesh, fam, sol, 0, e, c);
    CHECK(g <= 1e-24);
    CHECK(v <= 1e-24);
  }
}

TEST_CASE("broken constant face terms in closed form") {
  const double pi = std::numbers::pi;
  const auto mesh = build_mesh(Domain{1, {2 * pi}, {32}}, {2}, {8});
  const auto fam = testing::broken_constants(mesh, {1, 1});
  EigenSolution sol;
  sol.eigenvalues = Vec::Zero(1);
  sol.coefficients = Vec(2);
  sol.coefficients << std::sqrt(pi), 0.0;  // u = 1 on K_1
  const auto pv = penalty_values(mesh, {1, 1}, PenaltyConfig{});
  const auto c = estimator_constants(mesh, {1, 1}, pv);
  const double gamma2 = pi, alpha = 20.0 / pi;
  for (int e = 0; e < 2; ++e) {
    const auto [g, v] = face_terms(mesh, fam, sol, 0, e, c);
    CHECK(g == Approx(0.0).margin(1e-20));
    CHECK(v == Approx(0.25 * gamma2 * alpha * alpha * 2).epsilon(1e-13));
  }
}

TEST_CASE("gradient jump terms count every face twice") {
  const auto p = testing::two_well_problem(3);
  const auto mesh = p.mesh();
  const auto s = solve_fixed(mesh, p, {8, 11, 9, 12});
  const auto& c = s.constants;
  for (int i = 0; i < 3; ++i) {
    double sum_k = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) sum_k += s.report.gradient(i, e);
    double sum_f = 0.0;
    for (const auto& f : mesh.faces) {
      const auto fc = face_coupling(mesh, s.scf.family, f.id);
      Vec local(static_cast<Eigen::Index>(fc.dofs.size()));
      for (std::size_t a = 0; a < fc.dofs.size(); ++a)
        local[static_cast<Eigen::Index>(a)] = s.scf.solution.coefficients(fc.dofs[a], i);
      const Vec jg = fc.normal_grad_jump * local;
      sum_f += c.face_gamma2[static_cast<std::size_t>(f.id)] * f.weights.dot(jg.cwiseAbs2());
    }
    CHECK(sum_k == Approx(0.5 * sum_f).epsilon(1e-12));
  }
}

TEST_CASE("estimator rollups and nonnegativity") {
  const auto p = testing::two_well_problem(4);
  const auto s = solve_fixed(p.mesh(), p, {10, 14, 8, 12});
  const auto& r = s.report;
  CHECK(r.residual.minCoeff() >= 0.0);
  CHECK(r.gradient.minCoeff() >= 0.0);
  CHECK(r.value.minCoeff() >= 0.0);
  double by_element = 0.0;
  for (Eigen::Index e = 0; e < r.element.size(); ++e) by_element += r.element[e];
  CHECK(r.global == by_element);
  double by_pair = 0.0;
  for (Eigen::Index i = 0; i < r.eigenpair.size(); ++i) by_pair += r.eigenpair[i];
  CHECK(std::abs(r.global - by_pair) <= 1e-14 * r.global);
  CHECK(r.total == Mat(r.residual + r.gradient + r.value));
}

TEST_CASE("estimator constants") {
  const auto mesh = build_mesh(Domain{1, {8.0}, {32}}, {4}, {8});
  const auto pv = penalty_values(mesh, {4, 0, 2, 2}, PenaltyConfig{});
  const auto c = estimator_constants(mesh, {4, 0, 2, 2}, pv);
  CHECK(c.gamma1[0] == Approx(4.0 / 16));
  CHECK(c.gamma2[0] == Approx(0.5));
  CHECK(c.gamma1[1] == Approx(4.0));
  CHECK(c.gamma2[1] == Approx(2.0));
  // Face between elements 0 (J=4) and 1 (J=0): the larger gamma2.
  CHECK(c.face_gamma2[0] == Approx(2.0));
}
