#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "helpers.hpp"

using namespace albdg;
using Catch::Approx;

TEST_CASE("lgl rule with two and three points") {
  const auto r2 = lgl_rule(2);
  CHECK(r2.nodes[0] == Approx(-1.0).margin(1e-15));
  CHECK(r2.nodes[1] == Approx(1.0).margin(1e-15));
  CHECK(r2.weights[0] == Approx(1.0).margin(1e-15));
  CHECK(r2.weights[1] == Approx(1.0).margin(1e-15));
  const auto r3 = lgl_rule(3);
  CHECK(r3.nodes[1] == Approx(0.0).margin(1e-15));
  CHECK(r3.weights[0] == Approx(1.0 / 3).margin(1e-15));
  CHECK(r3.weights[1] == Approx(4.0 / 3).margin(1e-15));
  CHECK(r3.weights[2] == Approx(1.0 / 3).margin(1e-15));
}

TEST_CASE("lgl quadrature agrees with adaptive Gauss-Kronrod") {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const auto r7 = lgl_rule(7);
  CHECK(std::abs(r7.weights.sum() - 2.0) <= 1e-14);
  auto quad = [](const LglRule& r, auto f) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
    return s;
  };
  const auto x10 = [](double x) { return std::pow(x, 10); };
  CHECK(std::abs(quad(r7, x10) - GK::integrate(x10, -1.0, 1.0, 15, 1e-15)) <= 1e-12);
  // Degree 2N-1 is the exactness limit; a smooth integrand converges spectrally.
  const auto smooth = [](double x) { return std::exp(std::sin(3 * x)); };
  CHECK(std::abs(quad(lgl_rule(30), smooth) - GK::integrate(smooth, -1.0, 1.0, 15, 1e-15)) <= 1e-13);
  for (int order : {4, 9, 16})
    for (int deg = 0; deg <= 2 * order - 3; ++deg) {
      const auto p = [deg](double x) { return std::pow(x, deg); };
      CHECK(std::abs(quad(lgl_rule(order), p) - GK::integrate(p, -1.0, 1.0, 15, 1e-15)) <= 1e-12);
    }
}

TEST_CASE("lgl rule rejects order below two") { CHECK_THROWS_AS(lgl_rule(1), ConfigError); }

TEST_CASE("mesh partitions and face counts") {
  const auto m1 = build_mesh(Domain{1, {2 * std::numbers::pi}, {32}}, {4}, {6});
  CHECK(m1.num_elements() == 4);
  CHECK(m1.faces.size() == 4);
  CHECK(m1.element_size[0] == Approx(std::numbers::pi / 2));

  const auto m2 = build_mesh(Domain{2, {1.0, 2.0}, {16, 16}}, {3, 3}, {4, 4});
  CHECK(m2.num_elements() == 9);
  CHECK(m2.faces.size() == 18);

  const auto m3 = build_mesh(Domain{3, {7.65, 30.61, 45.92}, {8, 24, 36}}, {1, 6, 9}, {3, 3, 3});
  CHECK(m3.num_elements() == 54);
  CHECK(m3.element_size[0] == Approx(7.65));
  CHECK(m3.element_size[1] == Approx(30.61 / 6));
  CHECK(m3.element_size[2] == Approx(45.92 / 9));
  // Tiling: element volumes add up to the domain volume.
  double vol = 0.0;
  for (const auto& e : m3.elements) vol += (e.box.hi[0] - e.box.lo[0]) * (e.box.hi[1] - e.box.lo[1]) * (e.box.hi[2] - e.box.lo[2]);
  CHECK(std::abs(vol - m3.domain.volume()) <= 1e-12 * m3.domain.volume());
  // LGL weights integrate 1 over an element.
  CHECK(m3.element_weights.sum() == Approx(m3.element_volume()).epsilon(1e-13));
}

TEST_CASE("every face is seen twice through faces_of") {
  const auto m = build_mesh(Domain{2, {1.0, 1.0}, {16, 16}}, {3, 2}, {4, 4});
  std::vector<int> seen(m.faces.size(), 0);
  for (int e = 0; e < m.num_elements(); ++e)
    for (const auto& s : m.faces_of(e)) ++seen[static_cast<std::size_t>(s.face)];
  for (int s : seen) CHECK(s == 2);
}

TEST_CASE("single element along an axis gives self-faces") {
  const auto m = build_mesh(Domain{1, {3.0}, {16}}, {1}, {8});
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0].plus_element == 0);
  CHECK(m.faces[0].minus_element == 0);
}

TEST_CASE("extended element sizing") {
  const double pi = std::numbers::pi;
  const auto m = build_mesh(Domain{1, {2 * pi}, {64}}, {4}, {6});
  const auto q = extended_element(m, 0);
  CHECK(q.box.lo[0] == Approx(-pi / 2));
  CHECK(q.box.hi[0] == Approx(pi));
  CHECK(q.extension[0] == 3);
  CHECK(q.partial[0]);

  const auto single = extended_element(build_mesh(Domain{1, {5.0}, {32}}, {1}, {6}), 0);
  CHECK(single.box.lo[0] == Approx(0.0).margin(1e-15));
  CHECK(single.box.hi[0] == Approx(5.0));
  CHECK_FALSE(single.partial[0]);

  const auto two = extended_element(build_mesh(Domain{1, {4.0}, {32}}, {2}, {6}), 1);
  CHECK(two.extension[0] == 2);
  CHECK(two.box.hi[0] - two.box.lo[0] == Approx(4.0));
  CHECK_FALSE(two.partial[0]);

  const auto m3 = build_mesh(Domain{3, {7.65, 30.61, 45.92}, {8, 24, 36}}, {1, 6, 9}, {3, 3, 3});
  const auto q3 = extended_element(m3, 10);
  CHECK(q3.extension == std::vector<int>{1, 3, 3});
}

TEST_CASE("mesh rejects bad input") {
  CHECK_THROWS_AS(build_mesh(Domain{1, {1.0}, {16}}, {0}, {6}), ConfigError);
  CHECK_THROWS_AS(build_mesh(Domain{1, {-1.0}, {16}}, {2}, {6}), ConfigError);
  CHECK_THROWS_AS(build_mesh(Domain{2, {1.0}, {16}}, {2}, {6}), ConfigError);
}
