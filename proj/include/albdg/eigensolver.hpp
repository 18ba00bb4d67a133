#pragma once

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/error.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

/// Dense solver cap on total_dof.
inline constexpr int kMaxDenseDof = 8192;

struct EigenSolution {
  Vec eigenvalues;    // ascending
  Mat coefficients;   // total_dof x N
  std::vector<int> counts;
  std::vector<int> offsets;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Lowest N eigenpairs of the symmetric DG Hamiltonian. Each eigenvector is
/// scaled so its largest-magnitude coefficient is positive.
inline EigenSolution lowest_eigenpairs(const DGHamiltonian& h, int n) {
  if (n < 0 || n > h.dimension)
    throw ConfigError("lowest_eigenpairs: requested " + std::to_string(n) + " eigenpairs from a matrix of size " +
                      std::to_string(h.dimension));
  if (h.dimension > kMaxDenseDof)
    throw NumericalError("lowest_eigenpairs: total_dof " + std::to_string(h.dimension) + " exceeds the dense cap");
  EigenSolution sol;
  sol.counts = h.counts;
  sol.offsets = h.offsets;
  if (h.dimension == 0 || n == 0) {
    sol.eigenvalues = Vec(0);
    sol.coefficients = Mat(h.dimension, 0);
    return sol;
  }
  const Mat dense = h.dense();
  Eigen::SelfAdjointEigenSolver<Mat> es(dense);
  if (es.info() != Eigen::Success) throw NumericalError("lowest_eigenpairs: dense eigensolver did not converge");
  sol.eigenvalues = es.eigenvalues().head(n);
  sol.coefficients = es.eigenvectors().leftCols(n);
  fix_signs(sol.coefficients);
  return sol;
}

/// rho = sum_{i < N} |u_i|^2 on a uniform global grid.
inline Vec density_from_solution(const Mesh& mesh, const BasisFamily& family, const EigenSolution& sol, int occupied,
                                 const std::vector<int>& grid) {
  require(occupied >= 0 && occupied <= sol.size(), "density_from_solution: occupied exceeds available eigenpairs");
  Vec rho = Vec::Zero(static_cast<Eigen::Index>(product(grid)));
  for (int i = 0; i < occupied; ++i) {
    const Vec u = evaluate_field(mesh, family, sol.coefficients.col(i), grid);
    rho += u.cwiseAbs2();
  }
  return rho;
}

}  // namespace albdg
