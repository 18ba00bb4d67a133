#pragma once

// Tensor-product grid helpers shared by every module: x-fastest flat
// indexing, separable application of per-axis operators, and exact
// trigonometric interpolation of periodic samples.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "albdg/error.hpp"

namespace albdg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::size_t product(const std::vector<int>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

/// Flat index of a multi-index, first axis fastest.
inline std::size_t flat_index(const std::vector<int>& idx, const std::vector<int>& dims) {
  std::size_t flat = 0;
  for (std::size_t k = dims.size(); k-- > 0;) flat = flat * dims[k] + idx[k];
  return flat;
}

inline std::vector<int> multi_index(std::size_t flat, const std::vector<int>& dims) {
  std::vector<int> idx(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    idx[k] = static_cast<int>(flat % dims[k]);
    flat /= dims[k];
  }
  return idx;
}

/// Applies ops[k] along axis k of a tensor field (nullptr = identity).
/// Output extent along axis k is ops[k]->rows().
inline Vec apply_separable(const Vec& in, const std::vector<int>& dims,
                           const std::vector<const Mat*>& ops) {
  require(ops.size() == dims.size(), "apply_separable: operator count mismatch");
  require(static_cast<std::size_t>(in.size()) == product(dims), "apply_separable: size mismatch");
  Vec cur = in;
  std::vector<int> cur_dims = dims;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (ops[k] == nullptr) continue;
    const Mat& op = *ops[k];
    require(op.cols() == cur_dims[k], "apply_separable: operator width mismatch");
    std::size_t pre = 1;
    for (std::size_t a = 0; a < k; ++a) pre *= cur_dims[a];
    std::size_t post = 1;
    for (std::size_t a = k + 1; a < dims.size(); ++a) post *= cur_dims[a];
    const auto n_in = static_cast<Eigen::Index>(cur_dims[k]);
    const auto n_out = op.rows();
    Vec next(static_cast<Eigen::Index>(pre * post) * n_out);
    for (std::size_t b = 0; b < post; ++b) {
      Eigen::Map<const Mat> x(cur.data() + b * pre * n_in, static_cast<Eigen::Index>(pre), n_in);
      Eigen::Map<Mat> y(next.data() + b * pre * n_out, static_cast<Eigen::Index>(pre), n_out);
      y.noalias() = x * op.transpose();
    }
    cur = std::move(next);
    cur_dims[k] = static_cast<int>(n_out);
  }
  return cur;
}

/// Matrix mapping n periodic samples f(j*L/n) to the `deriv`-th derivative of
/// their trigonometric interpolant at `points` (absolute coordinates, any
/// real value; periodicity is implicit). For even n the Nyquist mode is split
/// symmetrically so the interpolant stays real; derivatives are those of that
/// same interpolant.
inline Mat periodic_interp_matrix(int n, double length, std::span<const double> points, int deriv = 0) {
  require(n >= 1 && length > 0.0, "periodic_interp_matrix: bad grid");
  require(deriv >= 0 && deriv <= 2, "periodic_interp_matrix: derivative order must be 0, 1 or 2");
  const double two_pi = 2.0 * std::numbers::pi;
  const int m_max = n / 2;
  const bool even = (n % 2 == 0);
  Mat out(static_cast<Eigen::Index>(points.size()), n);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int j = 0; j < n; ++j) {
      const double theta = two_pi * (points[p] - j * length / n) / length;
      const double c1 = std::cos(theta);
      const double s1 = std::sin(theta);
      double cm = 1.0, sm = 0.0;  // cos(m theta), sin(m theta)
      double acc = (deriv == 0) ? 1.0 : 0.0;
      for (int m = 1; m <= m_max; ++m) {
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
        const double weight = (even && m == m_max) ? 1.0 : 2.0;
        const double k = two_pi * m / length;
        switch (deriv) {
          case 0: acc += weight * cm; break;
          case 1: acc -= weight * k * sm; break;
          default: acc -= weight * k * k * cm; break;
        }
      }
      out(static_cast<Eigen::Index>(p), j) = acc / n;
    }
  }
  return out;
}

/// Uniform periodic sample coordinates j*L/n + origin.
inline std::vector<double> uniform_points(int n, double length, double origin = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = origin + j * length / n;
  return x;
}

}  // namespace albdg
