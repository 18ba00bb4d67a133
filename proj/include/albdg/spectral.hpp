#pragma once

// Fourier-spectral eigen-solves of -1/2 Laplacian + V with periodic boundary
// conditions: the local problems on extended elements that seed the basis,
// and the global reference problem used as a validation oracle.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "albdg/error.hpp"
#include "albdg/grid.hpp"
#include "albdg/mesh.hpp"

namespace albdg {

/// Largest grid handled by the dense solver.
inline constexpr std::size_t kMaxSpectralGrid = 4096;

struct SpectralProblem {
  Box box;
  std::vector<int> grid;
  Vec potential;  // samples at box.lo + j * side / grid, first axis fastest

  std::vector<double> lengths() const {
    std::vector<double> l;
    for (std::size_t k = 0; k < grid.size(); ++k) l.push_back(box.hi[k] - box.lo[k]);
    return l;
  }
  double cell_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < grid.size(); ++k) v *= (box.hi[k] - box.lo[k]) / grid[k];
    return v;
  }

  void validate() const {
    require(!grid.empty() && box.lo.size() == grid.size() && box.hi.size() == grid.size(),
            "spectral problem: inconsistent dimensions");
    for (std::size_t k = 0; k < grid.size(); ++k) {
      require(grid[k] >= 8 && grid[k] % 2 == 0, "spectral problem: grid counts must be even and >= 8");
      require(box.hi[k] > box.lo[k], "spectral problem: empty box");
    }
    require(static_cast<std::size_t>(potential.size()) == product(grid),
            "spectral problem: potential size does not match grid");
    require(potential.allFinite(), "spectral problem: potential must be finite");
  }
};

/// Lowest eigenpairs on a box. Vectors are orthonormal under the
/// uniform-grid inner product sum_j f_j g_j * cell_volume.
struct LocalEigenSet {
  int element = -1;
  Vec eigenvalues;
  Mat vectors;
  Box box;
  std::vector<int> grid;

  int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Dense matrix of -1/2 Laplacian on a periodic tensor grid (spectrally exact).
inline Mat kinetic_matrix(const std::vector<int>& grid, const std::vector<double>& lengths) {
  const std::size_t n = product(grid);
  Mat h = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto pts = uniform_points(grid[k], lengths[k]);
    const Mat t = -0.5 * periodic_interp_matrix(grid[k], lengths[k], pts, 2);
    for (std::size_t i = 0; i < n; ++i) {
      auto idx = multi_index(i, grid);
      const int ik = idx[k];
      for (int jk = 0; jk < grid[k]; ++jk) {
        idx[k] = jk;
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(flat_index(idx, grid))) += t(ik, jk);
      }
    }
  }
  return h;
}

/// Flips each column so its largest-magnitude entry is positive.
inline void fix_signs(Mat& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index imax = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&imax);
    if (vectors(imax, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

inline LocalEigenSet solve_local(const SpectralProblem& problem, int count) {
  problem.validate();
  const std::size_t n = product(problem.grid);
  require(count >= 1 && static_cast<std::size_t>(count) <= n, "solve_local: count must be in [1, grid size]");
  if (n > kMaxSpectralGrid)
    throw NumericalError("solve_local: grid of " + std::to_string(n) + " points exceeds the dense solver cap");

  Mat h = kinetic_matrix(problem.grid, problem.lengths());
  h.diagonal() += problem.potential;
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("solve_local: dense eigensolver failed");

  LocalEigenSet out;
  out.box = problem.box;
  out.grid = problem.grid;
  out.eigenvalues = es.eigenvalues().head(count);
  out.vectors = es.eigenvectors().leftCols(count);
  fix_signs(out.vectors);

  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (int j = 0; j < count; ++j) {
    const double res = (h * out.vectors.col(j) - out.eigenvalues[j] * out.vectors.col(j)).norm();
    if (!(res <= 1e-10 * scale))
      throw NumericalError("solve_local: eigenpair residual " + std::to_string(res) + " above tolerance");
  }
  out.vectors /= std::sqrt(problem.cell_volume());
  return out;
}

/// Global oracle eigenpairs on the whole periodic domain.
struct ReferenceSolution {
  Vec eigenvalues;
  Mat vectors;  // grid-normalized, on `grid`
  std::vector<int> grid;
  std::vector<double> lengths;
};

inline ReferenceSolution solve_reference(const Domain& domain, const std::vector<int>& grid,
                                         const Vec& potential, int count) {
  domain.validate();
  SpectralProblem p;
  p.box.lo.assign(static_cast<std::size_t>(domain.dim), 0.0);
  p.box.hi = domain.lengths;
  p.grid = grid;
  p.potential = potential;
  const auto set = solve_local(p, count);
  return {set.eigenvalues, set.vectors, grid, domain.lengths};
}

/// Resamples a periodic field given on a uniform grid over [0, L) onto the
/// tensor product of `points` (absolute coordinates) by trigonometric interpolation.
inline Vec resample_periodic(const Vec& field, const std::vector<int>& grid, const std::vector<double>& lengths,
                             const std::vector<std::vector<double>>& points,
                             const std::vector<int>& derivs = {}) {
  std::vector<Mat> ops;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const int der = derivs.empty() ? 0 : derivs[k];
    ops.push_back(periodic_interp_matrix(grid[k], lengths[k], points[k], der));
  }
  std::vector<const Mat*> ptrs;
  for (const auto& op : ops) ptrs.push_back(&op);
  return apply_separable(field, grid, ptrs);
}

/// Planewaves below a kinetic cutoff in a periodic cell: (sqrt(2 E_cut)/pi)^dim * volume.
inline double planewave_count(double ecut, double volume, int dim) {
  require(ecut > 0.0 && volume > 0.0, "planewave_count: cutoff and volume must be positive");
  return std::pow(std::sqrt(2.0 * ecut) / std::numbers::pi, dim) * volume;
}

/// Local eigenproblem on Q_K with the potential restricted from the global grid.
namespace detail {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace detail

/// Local potential on Q_K. Along axes where Q_K does not wrap the whole
/// domain, V is blended smoothly into a constant over the outer half of the
/// buffer so its Q_K-periodic extension stays smooth; V on K is unchanged.
inline SpectralProblem local_problem(const Mesh& mesh, const ExtendedElement& q, const Vec& global_potential) {
  SpectralProblem p;
  p.box = q.box;
  p.grid = q.grid;
  const int d = mesh.dim();
  std::vector<std::vector<double>> pts;
  const auto l = q.lengths();
  for (int k = 0; k < d; ++k) pts.push_back(uniform_points(q.grid[k], l[k], q.box.lo[k]));
  p.potential = resample_periodic(global_potential, mesh.domain.global_grid, mesh.domain.lengths, pts);

  bool any = false;
  for (int k = 0; k < d; ++k) any = any || q.partial[k];
  if (!any) return p;
  const std::size_t n = product(q.grid);
  Vec window = Vec::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = multi_index(i, q.grid);
    for (int k = 0; k < d; ++k) {
      if (!q.partial[k]) continue;
      const double x = idx[k] * l[k] / q.grid[k];
      const double dist = std::min(x, l[k] - x);  // to the periodic seam
      window[static_cast<Eigen::Index>(i)] *= detail::smooth_step(dist / (0.5 * mesh.element_size[k]));
    }
  }
  double sum = 0.0, count = 0.0;
  for (Eigen::Index i = 0; i < window.size(); ++i)
    if (window[i] < 1.0) {
      sum += p.potential[i];
      count += 1.0;
    }
  const double base = sum / count;
  p.potential = window.cwiseProduct(p.potential) + (Vec::Ones(window.size()) - window) * base;
  return p;
}

}  // namespace albdg
