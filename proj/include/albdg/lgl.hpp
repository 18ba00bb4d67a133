#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "albdg/error.hpp"
#include "albdg/grid.hpp"

namespace albdg {

/// Legendre-Gauss-Lobatto rule on [-1, 1], nodes ascending.
struct LglRule {
  Vec nodes;
  Vec weights;
  int order() const { return static_cast<int>(nodes.size()); }
};

/// Legendre polynomials P_0..P_degree at x.
inline std::vector<double> legendre_values(int degree, double x) {
  std::vector<double> p(static_cast<std::size_t>(degree + 1));
  p[0] = 1.0;
  if (degree >= 1) p[1] = x;
  for (int k = 2; k <= degree; ++k)
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
  return p;
}

/// `order` nodes including both endpoints; exact for degree <= 2*order-3.
inline LglRule lgl_rule(int order) {
  require(order >= 2, "lgl_rule: order must be >= 2");
  const int n = order - 1;  // polynomial degree N
  Vec x(order);
  // Chebyshev-Gauss-Lobatto initial guess, Newton on (1-x^2) P_N'(x).
  for (int i = 0; i < order; ++i) x[i] = -std::cos(std::numbers::pi * i / n);
  Vec x_old = Vec::Constant(order, 2.0);
  for (int iter = 0; iter < 100 && (x - x_old).cwiseAbs().maxCoeff() > 1e-16; ++iter) {
    x_old = x;
    for (int i = 0; i < order; ++i) {
      const auto p = legendre_values(n, x_old[i]);
      x[i] = x_old[i] - (x_old[i] * p[n] - p[n - 1]) / (order * p[n]);
    }
  }
  LglRule rule{x, Vec(order)};
  for (int i = 0; i < order; ++i) {
    const auto p = legendre_values(n, x[i]);
    rule.weights[i] = 2.0 / (n * (n + 1.0) * p[n] * p[n]);
  }
  rule.nodes[0] = -1.0;
  rule.nodes[order - 1] = 1.0;
  return rule;
}

/// Barycentric weights of a node set.
inline Vec barycentric_weights(const Vec& nodes) {
  const auto n = nodes.size();
  Vec w = Vec::Ones(n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != j) w[j] /= (nodes[j] - nodes[k]);
  return w;
}

/// Lagrange interpolation matrix from values at `nodes` to values at `points`.
inline Mat lagrange_matrix(const Vec& nodes, std::span<const double> points) {
  const Vec w = barycentric_weights(nodes);
  const auto n = nodes.size();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(points.size()), n);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double x = points[p];
    Eigen::Index hit = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (x == nodes[j]) hit = j;
    if (hit >= 0) {
      out(static_cast<Eigen::Index>(p), hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) denom += w[j] / (x - nodes[j]);
    for (Eigen::Index j = 0; j < n; ++j)
      out(static_cast<Eigen::Index>(p), j) = w[j] / (x - nodes[j]) / denom;
  }
  return out;
}

/// Nodal differentiation matrix: (D f)(x_i) = f'(x_i) for polynomials of degree < n.
inline Mat lagrange_diff_matrix(const Vec& nodes) {
  const Vec w = barycentric_weights(nodes);
  const auto n = nodes.size();
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) d(i, j) = (w[j] / w[i]) / (nodes[i] - nodes[j]);
    d(i, i) = -d.row(i).sum();
  }
  return d;
}

}  // namespace albdg
