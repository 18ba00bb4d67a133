#pragma once

// Runnable checks of the lifting bound, coercivity/continuity of the
// extended form and the reliability of the estimator.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/parallel.hpp"
#include "albdg/refinement.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

struct PropertyResult {
  std::string name;
  int samples = 0;
  int skipped = 0;
  double max_violation = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  nlohmann::json details;

  nlohmann::json to_json() const {
    return {{"name", name},         {"samples", samples}, {"skipped", skipped}, {"max_violation", max_violation},
            {"pass", pass},         {"seed", seed},       {"details", details}};
  }
};

/// Portable uniform draws in [-1, 1) (std distributions differ across
/// standard libraries; the engine itself is fully specified).
inline Mat random_coefficients(std::uint64_t seed, Eigen::Index rows, int cols) {
  std::mt19937_64 rng(seed);
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  return m;
}

/// Jump traces {q}.n+ of a gradient-space element q (coefficients beta).
inline FaceJumps mean_normal_traces(const Mesh& mesh, const BasisFamily& family, const Vec& beta) {
  FaceJumps out;
  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    Vec local(static_cast<Eigen::Index>(fc.dofs.size()));
    for (std::size_t a = 0; a < fc.dofs.size(); ++a) local[static_cast<Eigen::Index>(a)] = beta[fc.dofs[a]];
    out.jumps.push_back(fc.dofs.empty() ? Vec(Vec::Zero(f.weights.size())) : Vec(fc.mean_normal_grad * local));
  }
  return out;
}

/// max over random v of ||L v|| / (C_J ||[[v]]||) must stay <= 1 + 1e-8.
inline PropertyResult check_lifting_bound(const Mesh& mesh, const BasisFamily& family, int samples,
                                          std::uint64_t seed, double slack = 1e-8) {
  PropertyResult r;
  r.name = "lifting_bound";
  r.seed = seed;
  const auto data = lifting_constant(mesh, family);
  r.details["cj"] = data.cj;
  const Mat coeffs = random_coefficients(seed, family.total_dof, samples);
  std::vector<double> ratio(static_cast<std::size_t>(samples), -1.0);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const auto jumps = face_jumps(mesh, family, coeffs.col(static_cast<Eigen::Index>(s)));
    const double jn = jump_norm(mesh, jumps);
    const double ln = lifting_norm(data, apply_lifting(mesh, family, data, jumps));
    if (jn <= 1e-14 || data.cj == 0.0) return;  // 0/0
    ratio[s] = ln / (data.cj * jn);
  });
  double worst = 0.0;
  for (double q : ratio) {
    if (q < 0.0) {
      ++r.skipped;
      continue;
    }
    worst = std::max(worst, q);
    r.max_violation = std::max(r.max_violation, q - 1.0);
  }
  r.samples = samples;
  r.details["max_ratio"] = worst;
  // Sharpness: a jump equal to the normal trace of the maximizer.
  if (!data.empty && data.cj > 0.0) {
    const auto jumps = mean_normal_traces(mesh, family, data.maximizer);
    const double jn = jump_norm(mesh, jumps);
    const double ln = lifting_norm(data, apply_lifting(mesh, family, data, jumps));
    r.details["maximizer_ratio"] = jn > 0.0 ? ln / (data.cj * jn) : 0.0;
    r.max_violation = std::max(r.max_violation, jn > 0.0 ? ln / (data.cj * jn) - 1.0 : 0.0);
  }
  r.pass = r.max_violation <= slack;
  return r;
}

struct CoercivityOptions {
  double cj_factor = 2.01;
  double alpha_floor = 1e-3;
  bool expect_violation = false;  // negative control
  double slack = 1e-8;
};

/// Extreme values of A(u,u)/E(u,u) over the range of E.
inline std::pair<double, double> rayleigh_extremes(const Mat& a, const Mat& e, double rank_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (e + e.transpose()));
  const Vec& lam = es.eigenvalues();
  const double lmax = lam.size() ? lam.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam[i] > rank_tol * lmax) keep.push_back(i);
  if (keep.empty()) return {0.0, 0.0};
  Mat z(e.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    z.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
  const Mat red = z.transpose() * a * z;
  Eigen::SelfAdjointEigenSolver<Mat> rs(0.5 * (red + red.transpose()), Eigen::EigenvaluesOnly);
  return {rs.eigenvalues().minCoeff(), rs.eigenvalues().maxCoeff()};
}

/// 1/2 ||u||_E^2 <= A~(u,u) <= 2 ||u||_E^2 with alpha = cj_factor C_J^2 + floor,
/// on random samples and by an exact Rayleigh-quotient search; A_J is checked
/// the same way. With expect_violation the result passes when a violation
/// of the lower bound is found.
inline PropertyResult check_coercivity(const Mesh& mesh, const BasisFamily& family, int samples, std::uint64_t seed,
                                       const CoercivityOptions& opts = {}) {
  PropertyResult r;
  r.name = opts.expect_violation ? "coercivity_negative_control" : "coercivity";
  r.seed = seed;
  r.samples = samples;
  const auto data = lifting_constant(mesh, family);
  PenaltyConfig pc;
  pc.mode = PenaltyMode::cj_condition;
  pc.cj_factor = opts.cj_factor;
  pc.alpha_floor = opts.alpha_floor;
  const auto penalty = penalty_values(mesh, family.counts(), pc, data.cj);
  const Mat e = energy_matrix(mesh, family, penalty);
  const Mat a = bilinear_matrix(mesh, family, penalty);
  r.details["cj"] = data.cj;
  r.details["alpha"] = penalty.face.empty() ? 0.0 : penalty.face[0];

  const Mat coeffs = random_coefficients(seed, family.total_dof, samples);
  std::vector<double> lower(static_cast<std::size_t>(samples), 0.0), upper(static_cast<std::size_t>(samples), 0.0),
      lower_a(static_cast<std::size_t>(samples), 0.0), upper_a(static_cast<std::size_t>(samples), 0.0);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const Vec u = coeffs.col(static_cast<Eigen::Index>(s));
    const double en = u.dot(e * u);
    const double at = extended_bilinear(mesh, family, data, u, u, penalty);
    const double ad = u.dot(a * u);
    const double tol = opts.slack * std::max(en, 1e-300);
    lower[s] = std::max(0.0, 0.5 * en - at - tol) / std::max(en, 1e-300);
    upper[s] = std::max(0.0, at - 2.0 * en - tol) / std::max(en, 1e-300);
    lower_a[s] = std::max(0.0, 0.5 * en - ad - tol) / std::max(en, 1e-300);
    upper_a[s] = std::max(0.0, ad - 2.0 * en - tol) / std::max(en, 1e-300);
  });
  double sample_violation = 0.0, lower_found = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto i = static_cast<std::size_t>(s);
    sample_violation = std::max({sample_violation, lower[i], upper[i], lower_a[i], upper_a[i]});
    lower_found = std::max(lower_found, lower[i]);
  }
  const auto [qmin, qmax] = rayleigh_extremes(a, e);
  r.details["rayleigh_min"] = qmin;
  r.details["rayleigh_max"] = qmax;
  r.details["sample_violation"] = sample_violation;
  const double exact_violation = std::max({0.0, 0.5 - qmin - opts.slack, qmax - 2.0 - opts.slack});
  r.max_violation = std::max(sample_violation, exact_violation);
  if (opts.expect_violation) {
    const bool found = lower_found > 0.0 || 0.5 - qmin > opts.slack;
    r.details["violation_found"] = found;
    r.details["violation_found_by_sampling"] = lower_found > 0.0;
    r.pass = found;
  } else {
    r.pass = r.max_violation == 0.0;
  }
  return r;
}

/// Reference eigenfunction i sampled with gradients on every element's LGL grid.
inline NodalField reference_nodal(const Mesh& mesh, const ReferenceSolution& ref, int i) {
  const int d = mesh.dim();
  NodalField f;
  const Vec col = ref.vectors.col(i);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < d; ++k) pts.push_back(mesh.lgl_coords(e, k));
    f.values.push_back(resample_periodic(col, ref.grid, ref.lengths, pts));
    std::vector<Vec> grads;
    for (int k = 0; k < d; ++k) {
      std::vector<int> der(static_cast<std::size_t>(d), 0);
      der[k] = 1;
      grads.push_back(resample_periodic(col, ref.grid, ref.lengths, pts, der));
    }
    f.gradients.push_back(std::move(grads));
  }
  return f;
}

/// || u_ref - u_J ||_E with the sign of u_ref aligned to u_J.
inline double eigenfunction_error(const Mesh& mesh, const BasisFamily& family, const Vec& coeffs,
                                  const NodalField& ref, const PenaltyValues& penalty) {
  auto u = nodal_field(mesh, family, coeffs);
  const Vec& w = mesh.element_weights;
  double overlap = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    overlap += w.dot(u.values[static_cast<std::size_t>(e)].cwiseProduct(ref.values[static_cast<std::size_t>(e)]));
  const double s = overlap < 0.0 ? -1.0 : 1.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto ue = static_cast<std::size_t>(e);
    u.values[ue] = s * ref.values[ue] - u.values[ue];
    for (std::size_t k = 0; k < u.gradients[ue].size(); ++k)
      u.gradients[ue][k] = s * ref.gradients[ue][k] - u.gradients[ue][k];
  }
  return energy_norm(mesh, u, penalty);
}

struct ReliabilityOptions {
  double window_lo = 1e-3;
  double window_hi = 1e3;
  int max_inversions = 1;
  double floor = 1e-10;  // |eigenvalue error| below this is at the oracle floor
};

struct ReliabilityRung {
  int j = 0;
  int total_dof = 0;
  Vec eigenvalue_error;  // |eps_J - eps_ref|
  Vec energy_error;      // ||u - u_J||_E
  Vec eta2;              // eta_i^2
};

namespace detail {

inline int inversions(const std::vector<double>& seq) {
  int n = 0;
  for (std::size_t k = 1; k < seq.size(); ++k)
    if (seq[k] > seq[k - 1]) ++n;
  return n;
}

}  // namespace detail

/// Uniform J ladder on a linear problem: per eigenpair the eigenvalue error,
/// energy-norm error and eta_i must decrease (up to max_inversions) and
/// |d eps|/eta^2 and ||e||_E/eta must stay in the window. Rungs whose
/// eigenvalue error is below `floor` switch to absolute mode (pass when
/// eta^2 is also tiny) and are excluded from the ratio and trend checks.
inline PropertyResult check_reliability(const Problem& p, const std::vector<int>& ladder, const ReferenceScf& oracle,
                                        const ReliabilityOptions& opts = {},
                                        std::vector<ReliabilityRung>* rungs_out = nullptr) {
  PropertyResult r;
  r.name = "reliability";
  const Mesh mesh = p.mesh();
  const int n = p.potential.electrons;
  require(oracle.eigenvalues.size() >= n, "check_reliability: oracle has too few eigenpairs");
  std::vector<NodalField> refs;
  for (int i = 0; i < n; ++i) refs.push_back(reference_nodal(mesh, oracle.reference, i));

  std::vector<ReliabilityRung> rungs;
  for (int j : ladder) {
    const auto s = solve_fixed(mesh, p, std::vector<int>(static_cast<std::size_t>(mesh.num_elements()), j));
    ReliabilityRung rung;
    rung.j = j;
    rung.total_dof = s.scf.family.total_dof;
    rung.eigenvalue_error = (s.scf.eigenvalues - oracle.eigenvalues.head(n)).cwiseAbs();
    rung.energy_error = Vec(n);
    for (int i = 0; i < n; ++i)
      rung.energy_error[i] =
          eigenfunction_error(mesh, s.scf.family, s.scf.solution.coefficients.col(i), refs[static_cast<std::size_t>(i)],
                              s.scf.penalty);
    rung.eta2 = s.report.eigenpair;
    rungs.push_back(rung);
  }

  bool ok = true;
  double worst = 0.0;
  auto window_excess = [&](double q) {
    if (q < opts.window_lo) return std::log10(opts.window_lo / q);
    if (q > opts.window_hi) return std::log10(q / opts.window_hi);
    return 0.0;
  };
  nlohmann::json per;
  for (int i = 0; i < n; ++i) {
    std::vector<double> de, ee, eta;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& rung : rungs) {
      const double d = rung.eigenvalue_error[i], en = rung.energy_error[i], e2 = rung.eta2[i];
      nlohmann::json row = {{"J", rung.j}, {"eig_err", d}, {"energy_err", en}, {"eta2", e2}};
      if (d < opts.floor) {
        row["mode"] = "floor";
        if (e2 > 1e-8) ok = false;
        ++r.skipped;
      } else {
        const double q1 = d / e2, q2 = en / std::sqrt(e2);
        row["eig_ratio"] = q1;
        row["energy_ratio"] = q2;
        const double ex = std::max(window_excess(q1), window_excess(q2));
        worst = std::max(worst, ex);
        if (ex > 0.0) ok = false;
        de.push_back(d);
        ee.push_back(en);
        eta.push_back(e2);
      }
      rows.push_back(row);
      ++r.samples;
    }
    const int inv = std::max({detail::inversions(de), detail::inversions(ee), detail::inversions(eta)});
    if (inv > opts.max_inversions) ok = false;
    per.push_back({{"eigenpair", i}, {"rungs", rows}, {"inversions", inv}});
  }
  r.details["eigenpairs"] = per;
  r.max_violation = worst;
  r.pass = ok;
  if (rungs_out) *rungs_out = std::move(rungs);
  return r;
}

}  // namespace albdg
