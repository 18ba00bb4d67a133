#pragma once

// Non-uniform basis refinement driven by the element estimator, and the
// uniform baseline it is compared against.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/eigensolver.hpp"
#include "albdg/error.hpp"
#include "albdg/estimator.hpp"
#include "albdg/mesh.hpp"
#include "albdg/model_problem.hpp"

namespace albdg {

/// Everything needed to set up a solve except the per-element counts.
struct Problem {
  Domain domain;
  std::vector<int> element_counts;
  std::vector<int> lgl_orders;
  PotentialSpec potential;
  SCFConfig scf;
  PenaltyConfig penalty;
  BasisOptions basis;

  Mesh mesh() const { return build_mesh(domain, element_counts, lgl_orders); }
  int num_elements() const {
    int m = 1;
    for (int c : element_counts) m *= c;
    return m;
  }
};

enum class RefinementMode { uniform, nonuniform };

inline const char* to_string(RefinementMode m) { return m == RefinementMode::uniform ? "uniform" : "nonuniform"; }

struct RefinementConfig {
  double eps_min = 5e-7;
  double eps_max = 5e-6;
  int b_step = 5;
  int steps = 1;
  std::vector<int> initial;  // J_1 per element
  int j_max = 48;
  RefinementMode mode = RefinementMode::nonuniform;

  void validate(int elements) const {
    require(eps_min > 0.0 && eps_min < eps_max, "refinement: need 0 < eps_min < eps_max");
    require(b_step >= 1, "refinement: b_step must be >= 1");
    require(steps >= 1, "refinement: steps must be >= 1");
    require(j_max >= 0, "refinement: j_max must be >= 0");
    require(static_cast<int>(initial.size()) == elements, "refinement: initial counts need one entry per element");
    for (int j : initial) require(j >= 0 && j <= j_max, "refinement: initial counts must lie in [0, j_max]");
  }
};

/// One application of the count update: -b_step below eps_min, +b_step
/// above eps_max, clamped to [0, j_max].
inline std::vector<int> refine_counts(const std::vector<int>& counts, const Vec& eta_k, const RefinementConfig& cfg) {
  require(static_cast<Eigen::Index>(counts.size()) == eta_k.size(), "refine_counts: counts and estimator differ in size");
  std::vector<int> next(counts.size());
  for (std::size_t e = 0; e < counts.size(); ++e) {
    const double eta = eta_k[static_cast<Eigen::Index>(e)];
    int j = counts[e];
    if (eta < cfg.eps_min)
      j -= cfg.b_step;
    else if (eta > cfg.eps_max)
      j += cfg.b_step;
    next[e] = std::clamp(j, 0, cfg.j_max);
  }
  return next;
}

inline std::vector<int> uniform_counts(const std::vector<int>& counts, const RefinementConfig& cfg) {
  std::vector<int> next;
  for (int j : counts) next.push_back(std::min(j + cfg.b_step, cfg.j_max));
  return next;
}

/// Order statistics at 0, 20, ..., 100 percent with linear interpolation.
inline std::array<double, 6> quintiles(const Vec& v) {
  std::array<double, 6> q{};
  if (v.size() == 0) {
    q.fill(std::numeric_limits<double>::quiet_NaN());
    return q;
  }
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  for (int k = 0; k <= 5; ++k) {
    const double pos = 0.2 * k * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double t = pos - static_cast<double>(lo);
    q[static_cast<std::size_t>(k)] = s[lo] + t * (s[hi] - s[lo]);
  }
  return q;
}

struct StepRecord {
  int step = 0;
  std::vector<int> counts;  // J_K as requested
  std::vector<int> basis_counts;  // J_K actually built (SVD truncation may lower it)
  int total_dof = 0;
  Vec eigenvalues;
  EstimatorReport report;
  Vec eigenvalue_errors;  // empty without an oracle
  double eigensum_error = std::numeric_limits<double>::quiet_NaN();
  int scf_iterations = 0;
  double scf_residual = 0.0;
  double wall_seconds = 0.0;
  std::array<double, 6> quintiles{};
};

struct RefinementHistory {
  RefinementMode mode = RefinementMode::nonuniform;
  std::vector<StepRecord> steps;
  Vec final_density;
  std::vector<int> grid;
  std::vector<double> lengths;
  bool has_oracle = false;
};

class RefinementAborted : public NumericalError {
 public:
  RefinementAborted(const std::string& what, RefinementHistory h) : NumericalError(what), partial(std::move(h)) {}
  RefinementHistory partial;
};

/// The spectral SCF oracle for a problem on a grid `multiplier` times finer.
inline ReferenceScf problem_oracle(const Problem& p, int multiplier) {
  require(multiplier >= 1, "oracle: grid multiplier must be >= 1");
  std::vector<int> grid;
  for (int g : p.domain.global_grid) grid.push_back(g * multiplier);
  return reference_scf(p.domain, p.potential, p.scf, grid, p.potential.electrons);
}

/// Solves the problem once at fixed counts and evaluates the estimator.
struct SolveResult {
  ScfResult scf;
  EstimatorReport report;
  EstimatorConstants constants;
};

inline SolveResult solve_fixed(const Mesh& mesh, const Problem& p, const std::vector<int>& counts,
                               const std::optional<Vec>& initial_rho = std::nullopt) {
  const FamilyBuilder builder = [&](const Vec& veff) { return build_alb_family(mesh, veff, counts, p.basis); };
  SolveResult out;
  out.scf = scf_solve(mesh, p.potential, p.scf, builder, p.penalty, initial_rho);
  out.constants = estimator_constants(mesh, out.scf.family.counts(), out.scf.penalty);
  out.report = build_report(mesh, out.scf.family, out.scf.solution, out.scf.veff_elements, out.constants,
                            p.potential.electrons);
  return out;
}

inline RefinementHistory run_refinement(const Problem& p, const RefinementConfig& cfg,
                                        const ReferenceScf* oracle = nullptr) {
  const Mesh mesh = p.mesh();
  cfg.validate(mesh.num_elements());
  require(cfg.j_max <= p.basis.local_count, "refinement: j_max exceeds the local eigenpair count");
  RefinementHistory h;
  h.mode = cfg.mode;
  h.grid = p.domain.global_grid;
  h.lengths = p.domain.lengths;
  h.has_oracle = oracle != nullptr;
  const int n = p.potential.electrons;
  if (oracle) require(oracle->eigenvalues.size() >= n, "refinement: oracle has fewer eigenvalues than electrons");

  std::vector<int> counts = cfg.initial;
  std::optional<Vec> rho;
  for (int j = 1; j <= cfg.steps; ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult s;
    try {
      s = solve_fixed(mesh, p, counts, rho);
    } catch (const NumericalError& e) {
      throw RefinementAborted("refinement step " + std::to_string(j) + ": " + e.what(), h);
    }
    StepRecord r;
    r.step = j;
    r.counts = counts;
    r.basis_counts = s.scf.family.counts();
    r.total_dof = s.scf.family.total_dof;
    r.eigenvalues = s.scf.eigenvalues;
    r.report = s.report;
    r.report.step = j;
    r.scf_iterations = s.scf.iterations;
    r.scf_residual = s.scf.residual;
    r.quintiles = quintiles(s.report.element);
    if (oracle) {
      r.eigenvalue_errors = r.eigenvalues - oracle->eigenvalues.head(n);
      r.eigensum_error = std::abs(r.eigenvalues.sum() - oracle->eigenvalues.head(n).sum());
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rho = s.scf.rho;
    h.final_density = s.scf.rho;
    h.steps.push_back(std::move(r));
    if (j < cfg.steps)
      counts = cfg.mode == RefinementMode::uniform ? uniform_counts(counts, cfg)
                                                   : refine_counts(counts, s.report.element, cfg);
  }
  return h;
}

inline RefinementHistory run_adaptive(const Problem& p, RefinementConfig cfg, const ReferenceScf* oracle = nullptr) {
  cfg.mode = RefinementMode::nonuniform;
  return run_refinement(p, cfg, oracle);
}

inline RefinementHistory run_uniform(const Problem& p, RefinementConfig cfg, const ReferenceScf* oracle = nullptr) {
  cfg.mode = RefinementMode::uniform;
  return run_refinement(p, cfg, oracle);
}

}  // namespace albdg
