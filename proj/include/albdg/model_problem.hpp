#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/eigensolver.hpp"
#include "albdg/error.hpp"
#include "albdg/grid.hpp"
#include "albdg/mesh.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

struct Well {
  std::vector<double> center;
  double depth = 1.0;
  double width = 1.0;  // Gaussian standard deviation
};

struct PotentialSpec {
  std::vector<Well> wells;
  double constant_shift = 0.0;
  int electrons = 1;

  void validate(int dim) const {
    require(electrons >= 1, "potential: electrons must be positive");
    for (const auto& w : wells) {
      require(static_cast<int>(w.center.size()) == dim, "potential: well center must have dim entries");
      require(w.width > 0.0, "potential: well widths must be positive");
      require(w.depth > 0.0, "potential: well depths must be positive");
    }
  }
};

struct SCFConfig {
  double mixing = 0.5;
  double tol = 1e-8;
  int max_iter = 100;
  double hartree = 0.0;  // kappa
  double xc = 0.0;       // c_x
  double positivity_floor = 0.1;
  int freeze_basis_after = -1;  // rebuild the basis every iteration when negative

  bool linear() const { return hartree == 0.0 && xc == 0.0; }

  void validate() const {
    require(mixing > 0.0 && mixing <= 1.0, "scf: mixing must be in (0, 1]");
    require(tol > 0.0, "scf: tol must be positive");
    require(max_iter >= 1, "scf: max_iter must be >= 1");
    require(hartree >= 0.0 && xc >= 0.0, "scf: hartree and xc strengths must be >= 0");
  }
};

/// V_ion(r) = shift - sum_w depth * sum_images exp(-|r - c_w - image|^2 / (2 width^2)).
inline Vec build_ionic_potential(const Domain& domain, const PotentialSpec& spec, const std::vector<int>& grid) {
  domain.validate();
  spec.validate(domain.dim);
  const int d = domain.dim;
  const std::size_t n = product(grid);
  Vec v = Vec::Constant(static_cast<Eigen::Index>(n), spec.constant_shift);
  const double cutoff = std::sqrt(2.0 * std::log(1e14));  // exp(-r^2/2w^2) < 1e-14 beyond cutoff*w
  for (const auto& w : spec.wells) {
    std::vector<int> images;
    for (int k = 0; k < d; ++k) images.push_back(static_cast<int>(std::ceil(cutoff * w.width / domain.lengths[k])) + 1);
    std::vector<int> span;
    for (int k = 0; k < d; ++k) span.push_back(2 * images[k] + 1);
    for (std::size_t p = 0; p < n; ++p) {
      const auto idx = multi_index(p, grid);
      double sum = 0.0;
      for (std::size_t im = 0; im < product(span); ++im) {
        const auto shift = multi_index(im, span);
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double x = idx[k] * domain.lengths[k] / grid[k];
          double c = std::fmod(w.center[k], domain.lengths[k]);
          if (c < 0.0) c += domain.lengths[k];
          const double dx = x - c - (shift[k] - images[k]) * domain.lengths[k];
          r2 += dx * dx;
        }
        const double g = std::exp(-r2 / (2.0 * w.width * w.width));
        if (g >= 1e-14) sum += g;
      }
      v[static_cast<Eigen::Index>(p)] -= w.depth * sum;
    }
  }
  return v;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Solves -Lap V_H = kappa (rho - mean rho) on the periodic grid; zero-mean output.
inline Vec hartree_potential(const Vec& rho, const std::vector<int>& grid, const std::vector<double>& lengths,
                             double kappa) {
  const std::size_t n = product(grid);
  require(static_cast<std::size_t>(rho.size()) == n, "hartree_potential: density size mismatch");
  const int d = static_cast<int>(grid.size());
  // FFTW is row-major: reverse our first-axis-fastest dimensions.
  std::vector<int> rev(grid.rbegin(), grid.rend());
  const int nx_half = grid[0] / 2 + 1;
  const std::size_t ncomplex = n / static_cast<std::size_t>(grid[0]) * static_cast<std::size_t>(nx_half);

  std::vector<double> real(rho.data(), rho.data() + n);
  std::vector<std::complex<double>> spec(ncomplex);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c(d, rev.data(), real.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r(d, rev.data(), reinterpret_cast<fftw_complex*>(spec.data()), real.data(), FFTW_ESTIMATE);
  }
  std::copy(rho.data(), rho.data() + n, real.begin());
  fftw_execute(fwd);

  std::vector<int> cdims = grid;
  cdims[0] = nx_half;
  for (std::size_t p = 0; p < ncomplex; ++p) {
    const auto idx = multi_index(p, cdims);
    double k2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const int m = idx[k] <= grid[k] / 2 ? idx[k] : idx[k] - grid[k];
      const double kk = 2.0 * std::numbers::pi * m / lengths[k];
      k2 += kk * kk;
    }
    spec[p] = (k2 == 0.0) ? std::complex<double>{} : spec[p] * (kappa / (k2 * static_cast<double>(n)));
  }
  fftw_execute(bwd);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return Eigen::Map<Vec>(real.data(), static_cast<Eigen::Index>(n));
}

/// V_xc = -c_x rho^(1/3).
inline Vec xc_potential(const Vec& rho, double cx) {
  return rho.unaryExpr([cx](double r) { return -cx * std::cbrt(std::max(r, 0.0)); });
}

inline double grid_integral(const Vec& f, const Domain& domain, const std::vector<int>& grid) {
  return f.sum() * domain.volume() / static_cast<double>(product(grid));
}

/// Raised when the SCF loop exhausts max_iter.
class ScfError : public NumericalError {
 public:
  ScfError(const std::string& what, double residual) : NumericalError(what), last_residual(residual) {}
  double last_residual;
};

using FamilyBuilder = std::function<BasisFamily(const Vec& veff)>;

struct ScfResult {
  Vec rho;                    // converged density on the global grid
  Vec veff;                   // effective potential including the positivity shift
  double shift = 0.0;
  std::vector<Vec> veff_elements;
  BasisFamily family;
  PenaltyValues penalty;
  EigenSolution solution;     // eigenvalues include the shift (consistent with veff)
  Vec eigenvalues;            // reported eigenvalues, shift removed
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// Effective potential V_ion + V_H[rho] + V_xc[rho] (no shift).
inline Vec effective_potential(const Vec& vion, const Vec& rho, const Domain& domain, const std::vector<int>& grid,
                               const SCFConfig& scf) {
  Vec v = vion;
  if (scf.hartree != 0.0) v += hartree_potential(rho, grid, domain.lengths, scf.hartree);
  if (scf.xc != 0.0) v += xc_potential(rho, scf.xc);
  return v;
}

/// Self-consistent loop with simple density mixing. The basis is rebuilt from
/// the current V_eff every iteration (until freeze_basis_after, if set).
inline ScfResult scf_solve(const Mesh& mesh, const PotentialSpec& spec, const SCFConfig& scf,
                           const FamilyBuilder& builder, const PenaltyConfig& penalty_cfg,
                           const std::optional<Vec>& initial_rho = std::nullopt) {
  scf.validate();
  spec.validate(mesh.dim());
  const auto& grid = mesh.domain.global_grid;
  const Vec vion = build_ionic_potential(mesh.domain, spec, grid);
  const int n = spec.electrons;
  Vec rho = initial_rho.value_or(
      Vec::Constant(static_cast<Eigen::Index>(product(grid)), n / mesh.domain.volume()));
  require(static_cast<std::size_t>(rho.size()) == product(grid), "scf: initial density size mismatch");

  ScfResult out;
  for (int it = 1; it <= scf.max_iter; ++it) {
    const Vec v = effective_potential(vion, rho, mesh.domain, grid, scf);
    out.shift = std::max(0.0, scf.positivity_floor - v.minCoeff());
    out.veff = v.array() + out.shift;
    if (scf.freeze_basis_after < 0 || it <= scf.freeze_basis_after || out.family.elements.empty())
      out.family = builder(out.veff);
    if (out.family.total_dof < n)
      throw ConfigError("scf: total_dof " + std::to_string(out.family.total_dof) + " is below the electron count");
    double cj = 0.0;
    if (penalty_cfg.mode == PenaltyMode::cj_condition) cj = lifting_constant(mesh, out.family).cj;
    out.penalty = penalty_values(mesh, out.family.counts(), penalty_cfg, cj);
    out.veff_elements = sample_on_elements(mesh, out.veff);
    const auto h = assemble_hamiltonian(mesh, out.family, out.veff_elements, out.penalty);
    out.solution = lowest_eigenpairs(h, n);
    out.eigenvalues = out.solution.eigenvalues.array() - out.shift;

    Vec rho_new = density_from_solution(mesh, out.family, out.solution, n, grid);
    rho_new *= n / grid_integral(rho_new, mesh.domain, grid);
    out.iterations = it;
    if (scf.linear()) {
      out.rho = rho_new;
      out.residual = 0.0;
      out.residual_history.push_back(0.0);
      return out;
    }
    out.residual = (rho_new - rho).norm() / rho.norm();
    out.residual_history.push_back(out.residual);
    if (out.residual < scf.tol) {
      out.rho = rho_new;
      return out;
    }
    rho = (1.0 - scf.mixing) * rho + scf.mixing * rho_new;
  }
  throw ScfError("scf: no convergence after " + std::to_string(scf.max_iter) + " iterations (residual " +
                     std::to_string(out.residual) + ")",
                 out.residual);
}

/// Global spectral SCF on a fine uniform grid with the same functional; the
/// validation oracle for nonlinear runs (reduces to one linear solve when
/// the functional is density independent).
struct ReferenceScf {
  Vec rho;
  Vec eigenvalues;
  ReferenceSolution reference;
  std::vector<int> grid;
  int iterations = 0;
};

inline ReferenceScf reference_scf(const Domain& domain, const PotentialSpec& spec, const SCFConfig& scf,
                                  const std::vector<int>& grid, int count) {
  scf.validate();
  require(count >= spec.electrons, "reference_scf: need at least as many eigenpairs as electrons");
  const Vec vion = build_ionic_potential(domain, spec, grid);
  const int n = spec.electrons;
  Vec rho = Vec::Constant(static_cast<Eigen::Index>(product(grid)), n / domain.volume());
  ReferenceScf out;
  out.grid = grid;
  for (int it = 1; it <= scf.max_iter; ++it) {
    const Vec v = effective_potential(vion, rho, domain, grid, scf);
    out.reference = solve_reference(domain, grid, v, count);
    Vec rho_new = out.reference.vectors.leftCols(n).rowwise().squaredNorm();
    rho_new *= n / grid_integral(rho_new, domain, grid);
    out.iterations = it;
    out.eigenvalues = out.reference.eigenvalues;
    const double res = scf.linear() ? 0.0 : (rho_new - rho).norm() / rho.norm();
    if (res < scf.tol) {
      out.rho = rho_new;
      return out;
    }
    rho = (1.0 - scf.mixing) * rho + scf.mixing * rho_new;
  }
  throw ScfError("reference_scf: no convergence", 0.0);
}

}  // namespace albdg
