#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace albdg;
using Catch::Approx;

TEST_CASE("ionic potential") {
  const Domain d{1, {10.0}, {100}};
  SECTION("no wells is the constant shift") {
    PotentialSpec s;
    s.constant_shift = 2.0;
    const Vec v = build_ionic_potential(d, s, d.global_grid);
    CHECK((v.array() - 2.0).abs().maxCoeff() == 0.0);
  }
  SECTION("one centred well takes its minimum at the centre") {
    PotentialSpec s;
    s.constant_shift = 1.0;
    s.wells = {{{5.0}, 3.0, 1.5}};
    const Vec v = build_ionic_potential(d, s, d.global_grid);
    Eigen::Index arg;
    v.minCoeff(&arg);
    CHECK(arg == 50);
    double images = 0.0;
    for (int m = -20; m <= 20; ++m) images += std::exp(-(m * 10.0) * (m * 10.0) / (2 * 1.5 * 1.5));
    CHECK(v[50] == Approx(1.0 - 3.0 * images).epsilon(1e-14));
  }
  SECTION("translation covariance") {
    PotentialSpec s;
    s.wells = {{{2.0}, 3.0, 0.7}, {{7.3}, 1.0, 0.4}};
    PotentialSpec t = s;
    for (auto& w : t.wells) w.center[0] += 0.3;  // three grid cells
    const Vec a = build_ionic_potential(d, s, d.global_grid);
    const Vec b = build_ionic_potential(d, t, d.global_grid);
    for (int i = 0; i < 100; ++i) CHECK(b[(i + 3) % 100] == Approx(a[i]).margin(1e-13));
  }
}

TEST_CASE("hartree potential") {
  const double pi = std::numbers::pi;
  const int n = 64;
  SECTION("constant density") {
    CHECK(hartree_potential(Vec::Constant(n, 0.3), {n}, {2 * pi}, 1.0).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SECTION("cosine") {
    Vec rho(n), expect(n);
    for (int i = 0; i < n; ++i) {
      const double x = 2 * pi * i / n;
      rho[i] = 1.5 + std::cos(x);
      expect[i] = std::cos(x);
    }
    CHECK((hartree_potential(rho, {n}, {2 * pi}, 1.0) - expect).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SECTION("real-space convolution with the lattice Green's function") {
    const double l = 7.0, h = l / n;
    Vec rho(n);
    for (int i = 0; i < n; ++i) rho[i] = std::exp(-std::pow(i * h - 3.0, 2)) + 0.2 * std::sin(2 * pi * i * h / l);
    // G(x) = (1/L) sum_{k != 0} e^{ikx}/k^2 over the grid's modes, Nyquist once.
    Vec g = Vec::Zero(n);
    for (int j = 0; j < n; ++j)
      for (int m = 1; m <= n / 2; ++m) {
        const double k = 2 * pi * m / l;
        g[j] += (m == n / 2 ? 1.0 : 2.0) * std::cos(k * j * h) / (k * k * l);
      }
    const double kappa = 0.37;
    Vec direct = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) direct[i] += kappa * g[(i - j + n) % n] * rho[j] * h;
    CHECK((hartree_potential(rho, {n}, {l}, kappa) - direct).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("exchange-correlation potential") {
  CHECK(xc_potential(Vec::Zero(4), 1.0).norm() == 0.0);
  CHECK((xc_potential(Vec::Constant(4, 8.0), 1.0).array() + 2.0).abs().maxCoeff() <= 1e-15);
  Vec lo(5), hi(5);
  lo << 0, 0.1, 1, 2, 5;
  hi << 0.1, 0.1, 3, 2.5, 9;
  const Vec a = xc_potential(hi, 0.3), b = xc_potential(lo, 0.3);
  for (int i = 0; i < 5; ++i) CHECK(a[i] <= b[i]);
}

TEST_CASE("linear problems take one SCF iteration and match a direct solve") {
  const auto p = testing::two_well_problem(2);
  const auto mesh = p.mesh();
  const auto s = solve_fixed(mesh, p, {10, 10, 10, 10});
  CHECK(s.scf.iterations == 1);
  const Vec v = s.scf.veff;
  const auto fam = build_alb_family(mesh, v, {10, 10, 10, 10}, p.basis);
  const auto pv = penalty_values(mesh, fam.counts(), p.penalty);
  const auto sol = lowest_eigenpairs(assemble_hamiltonian(mesh, fam, sample_on_elements(mesh, v), pv), 2);
  CHECK((sol.eigenvalues - s.scf.solution.eigenvalues).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("nonlinear SCF keeps the electron count and is a fixed point") {
  auto p = testing::two_well_problem(2);
  p.scf.hartree = 0.1;
  p.scf.xc = 0.1;
  p.scf.tol = 1e-8;
  const auto mesh = p.mesh();
  const auto s = solve_fixed(mesh, p, {12, 12, 12, 12});
  CHECK(s.scf.iterations > 1);
  CHECK(s.scf.residual < p.scf.tol);
  CHECK(grid_integral(s.scf.rho, p.domain, p.domain.global_grid) == Approx(2.0).epsilon(1e-6));
  const auto again = solve_fixed(mesh, p, {12, 12, 12, 12}, s.scf.rho);
  CHECK(again.scf.residual_history.front() < p.scf.tol);
}

TEST_CASE("SCF reports failure to converge") {
  auto p = testing::two_well_problem(2);
  p.scf.hartree = 0.1;
  p.scf.xc = 0.1;
  p.scf.max_iter = 2;
  CHECK_THROWS_AS(solve_fixed(p.mesh(), p, {8, 8, 8, 8}), ScfError);
}

TEST_CASE("constant potential shift moves eigenvalues and leaves the density") {
  auto p = testing::two_well_problem(3);
  const auto a = solve_fixed(p.mesh(), p, {10, 10, 10, 10});
  p.potential.constant_shift = 1.25;
  const auto b = solve_fixed(p.mesh(), p, {10, 10, 10, 10});
  CHECK((b.scf.eigenvalues.array() - a.scf.eigenvalues.array() - 1.25).abs().maxCoeff() <= 1e-10);
  CHECK((b.scf.rho - a.scf.rho).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("too many electrons for the basis is a config error") {
  auto p = testing::two_well_problem(9);
  CHECK_THROWS_AS(solve_fixed(p.mesh(), p, {2, 2, 2, 2}), ConfigError);
}

TEST_CASE("spectral SCF oracle agrees with itself under refinement") {
  auto p = testing::two_well_problem(2);
  p.scf.hartree = 0.1;
  p.scf.xc = 0.1;
  const auto a = problem_oracle(p, 1);
  const auto b = problem_oracle(p, 2);
  CHECK(grid_integral(b.rho, p.domain, b.grid) == Approx(2.0).epsilon(1e-10));
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-6);
}
