#include <catch_amalgamated.hpp>

#include <Eigen/SparseCholesky>

#include "helpers.hpp"

using namespace albdg;
using Catch::Approx;

namespace {

SpectralProblem box_problem(double length, int n, const std::function<double(double)>& v) {
  SpectralProblem p;
  p.box.lo = {0.0};
  p.box.hi = {length};
  p.grid = {n};
  p.potential = Vec(n);
  for (int i = 0; i < n; ++i) p.potential[i] = v(i * length / n);
  return p;
}

double gaussian_images(double x, double c, double depth, double w, double length) {
  double s = 0.0;
  for (int m = -4; m <= 4; ++m) {
    const double r = x - c - m * length;
    s += std::exp(-r * r / (2 * w * w));
  }
  return -depth * s;
}

// Lowest eigenvalue of the periodic second-order finite-difference operator
// by shift-invert power iteration.
double fd_ground_state(double length, int n, const std::function<double(double)>& v) {
  const double h = length / n;
  std::vector<Eigen::Triplet<double>> t;
  double vmin = 0.0;
  for (int i = 0; i < n; ++i) vmin = std::min(vmin, v(i * h));
  const double shift = vmin - 1.0;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 1.0 / (h * h) + v(i * h) - shift);
    t.emplace_back(i, (i + 1) % n, -0.5 / (h * h));
    t.emplace_back(i, (i + n - 1) % n, -0.5 / (h * h));
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  Vec x = Vec::Ones(n);
  double mu = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec y = ldlt.solve(x);
    const double next = x.dot(y) / x.dot(x);
    x = y / y.norm();
    if (std::abs(next - mu) < 1e-15 * std::abs(next)) break;
    mu = next;
  }
  return 1.0 / mu + shift;
}

}  // namespace

TEST_CASE("local free particle eigenvalues") {
  const auto set = solve_local(box_problem(2 * std::numbers::pi, 16, [](double) { return 0.0; }), 3);
  CHECK(set.eigenvalues[0] == Approx(0.0).margin(1e-12));
  CHECK(set.eigenvalues[1] == Approx(0.5).margin(1e-12));
  CHECK(set.eigenvalues[2] == Approx(0.5).margin(1e-12));
}

TEST_CASE("constant potential shifts local eigenvalues exactly") {
  const auto v0 = [](double x) { return std::cos(x); };
  const auto v1 = [](double x) { return std::cos(x) + 1.75; };
  const auto a = solve_local(box_problem(2 * std::numbers::pi, 32, v0), 6);
  const auto b = solve_local(box_problem(2 * std::numbers::pi, 32, v1), 6);
  CHECK((b.eigenvalues.array() - a.eigenvalues.array() - 1.75).abs().maxCoeff() <= 1e-11);
}

TEST_CASE("local eigenpairs have small residual and are orthonormal") {
  const double l = 10.0;
  const auto p = box_problem(l, 128, [&](double x) { return gaussian_images(x, 5.0, 5.0, 1.0, l); });
  const auto set = solve_local(p, 8);
  const Mat h = kinetic_matrix(p.grid, p.lengths()) + Mat(p.potential.asDiagonal());
  for (int j = 0; j < set.count(); ++j) {
    const Vec u = set.vectors.col(j);
    CHECK((h * u - set.eigenvalues[j] * u).norm() / u.norm() <= 1e-9);
  }
  const Mat g = set.vectors.transpose() * set.vectors * p.cell_volume();
  CHECK((g - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gaussian well ground state matches a finite-difference oracle") {
  const double l = 10.0;
  const auto v = [&](double x) { return gaussian_images(x, 5.0, 5.0, 1.0, l); };
  const double fd = (4.0 * fd_ground_state(l, 4096, v) - fd_ground_state(l, 2048, v)) / 3.0;
  const auto set = solve_local(box_problem(l, 128, v), 1);
  CHECK(std::abs(set.eigenvalues[0] - fd) <= 1e-4);
}

TEST_CASE("reference solver on free particles") {
  const double pi = std::numbers::pi;
  const auto r1 = solve_reference(Domain{1, {2 * pi}, {32}}, {32}, Vec::Zero(32), 5);
  const double e1[5] = {0, 0.5, 0.5, 2, 2};
  for (int i = 0; i < 5; ++i) CHECK(r1.eigenvalues[i] == Approx(e1[i]).margin(1e-12));
  const auto r2 = solve_reference(Domain{2, {2 * pi, 2 * pi}, {16, 16}}, {16, 16}, Vec::Zero(256), 5);
  const double e2[5] = {0, 0.5, 0.5, 0.5, 0.5};
  for (int i = 0; i < 5; ++i) CHECK(r2.eigenvalues[i] == Approx(e2[i]).margin(1e-12));
}

TEST_CASE("two-well reference is stable under grid doubling") {
  const auto p = testing::two_well_problem();
  const auto a = problem_oracle(p, 2);
  const auto b = problem_oracle(p, 4);
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("reference solver refuses grids beyond the dense cap") {
  CHECK_THROWS(solve_reference(Domain{1, {1.0}, {8192}}, {8192}, Vec::Zero(8192), 1));
}

TEST_CASE("planewave count") {
  const double pi = std::numbers::pi;
  CHECK(planewave_count(pi * pi / 2, 1.0, 3) == Approx(1.0).epsilon(1e-14));
  CHECK(planewave_count(pi * pi / 2, 7.5, 1) == Approx(7.5).epsilon(1e-14));
  const double direct = std::sqrt(20.0) * std::sqrt(20.0) * std::sqrt(20.0) / (pi * pi * pi) * 1000.0;
  CHECK(planewave_count(10.0, 1000.0, 3) == Approx(direct).epsilon(1e-14));
  CHECK_THROWS_AS(planewave_count(0.0, 1.0, 3), ConfigError);
}

TEST_CASE("trigonometric resampling reproduces band-limited fields") {
  const int n = 32;
  const double l = 3.0;
  Vec f(n);
  const double k = 2 * std::numbers::pi / l;
  for (int i = 0; i < n; ++i) f[i] = std::sin(3 * k * i * l / n) + 0.5 * std::cos(k * i * l / n);
  const std::vector<double> pts = {0.1, 0.77, 1.3, 2.999};
  const Vec v = resample_periodic(f, {n}, {l}, {pts});
  const Vec dv = resample_periodic(f, {n}, {l}, {pts}, {1});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = pts[i];
    CHECK(v[static_cast<Eigen::Index>(i)] == Approx(std::sin(3 * k * x) + 0.5 * std::cos(k * x)).margin(1e-12));
    CHECK(dv[static_cast<Eigen::Index>(i)] ==
          Approx(3 * k * std::cos(3 * k * x) - 0.5 * k * std::sin(k * x)).margin(1e-11));
  }
}
