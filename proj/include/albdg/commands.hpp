#pragma once

// solve | adapt | oracle | report: the user-facing orchestration layer.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "albdg/config.hpp"
#include "albdg/io.hpp"
#include "albdg/properties.hpp"
#include "albdg/refinement.hpp"

namespace albdg {

namespace fs = std::filesystem;

inline nlohmann::json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline std::string step_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%03d.json", step);
  return buf;
}

// ---------------------------------------------------------------------------
// Oracle bundle

inline void write_oracle(const fs::path& dir, const ReferenceScf& o, const RunConfig& cfg) {
  const io::Meta meta{cfg.physics_hash(), "oracle"};
  nlohmann::json j = {{"physics_hash", cfg.physics_hash()},
                      {"grid", o.grid},
                      {"lengths", cfg.problem.domain.lengths},
                      {"iterations", o.iterations},
                      {"eigenvalues", to_json(o.eigenvalues)},
                      {"vectors", o.reference.vectors.cols()}};
  std::vector<io::Row> rows;
  for (Eigen::Index i = 0; i < o.eigenvalues.size(); ++i)
    rows.push_back({io::fmt(static_cast<int>(i)), io::fmt(o.eigenvalues[i])});
  io::write_csv(dir / "eigenvalues.csv", {"i", "eigenvalue"}, rows, meta);
  io::write_grid(dir / "density.bin", o.rho, o.grid, cfg.problem.domain.lengths, meta);
  for (Eigen::Index i = 0; i < o.reference.vectors.cols(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "vector_%03d.bin", static_cast<int>(i));
    io::write_grid(dir / name, o.reference.vectors.col(i), o.grid, cfg.problem.domain.lengths, meta);
  }
  io::write_json(dir / "oracle.json", j, meta);
}

/// Loads a cached bundle when its physics hash matches the config.
inline std::optional<ReferenceScf> load_oracle(const fs::path& dir, const RunConfig& cfg) {
  if (!fs::exists(dir / "oracle.json")) return std::nullopt;
  const auto j = io::read_json(dir / "oracle.json");
  if (j.value("physics_hash", std::string{}) != cfg.physics_hash()) return std::nullopt;
  ReferenceScf o;
  o.grid = j.at("grid").get<std::vector<int>>();
  o.iterations = j.at("iterations").get<int>();
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  o.eigenvalues = Eigen::Map<const Vec>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  o.rho = io::read_grid(dir / "density.bin").values;
  const int nv = j.at("vectors").get<int>();
  o.reference.grid = o.grid;
  o.reference.lengths = j.at("lengths").get<std::vector<double>>();
  o.reference.eigenvalues = o.eigenvalues;
  o.reference.vectors = Mat(static_cast<Eigen::Index>(product(o.grid)), nv);
  for (int i = 0; i < nv; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "vector_%03d.bin", i);
    o.reference.vectors.col(i) = io::read_grid(dir / name).values;
  }
  return o;
}

struct OracleOutcome {
  ReferenceScf oracle;
  bool cache_hit = false;
};

inline OracleOutcome oracle_for(const RunConfig& cfg, const fs::path& dir) {
  if (auto cached = load_oracle(dir, cfg)) return {*cached, true};
  OracleOutcome out{problem_oracle(cfg.problem, cfg.oracle_multiplier), false};
  write_oracle(dir, out.oracle, cfg);
  return out;
}

// ---------------------------------------------------------------------------
// History directories

inline void write_history(const fs::path& dir, const RefinementHistory& h, const RunConfig& cfg) {
  const io::Meta meta{cfg.hash(), std::string("history/") + to_string(h.mode)};
  io::write_json(dir / "history.json",
                 {{"mode", to_string(h.mode)},
                  {"steps", h.steps.size()},
                  {"has_oracle", h.has_oracle},
                  {"grid", h.grid},
                  {"lengths", h.lengths},
                  {"error_measure", "eigensum_error = |sum_i eps_i - sum_i eps_i(oracle)|"}},
                 meta);
  std::vector<io::Row> steps, counts, est, eig;
  for (const auto& s : h.steps) {
    io::Row row = {io::fmt(s.step), io::fmt(s.total_dof), io::fmt(s.report.global), io::fmt(s.eigensum_error),
                   io::fmt(s.scf_iterations), io::fmt(s.scf_residual)};
    for (double q : s.quintiles) row.push_back(io::fmt(q));
    steps.push_back(row);
    for (std::size_t e = 0; e < s.counts.size(); ++e)
      counts.push_back({io::fmt(s.step), io::fmt(e), io::fmt(s.counts[e]), io::fmt(s.basis_counts[e]),
                        io::fmt(s.report.element[static_cast<Eigen::Index>(e)])});
    const auto& r = s.report;
    for (Eigen::Index e = 0; e < r.element.size(); ++e)
      for (Eigen::Index i = 0; i < r.eigenpair.size(); ++i)
        est.push_back({io::fmt(s.step), io::fmt(static_cast<int>(e)), io::fmt(static_cast<int>(i)),
                       io::fmt(r.residual(i, e)), io::fmt(r.gradient(i, e)), io::fmt(r.value(i, e)),
                       io::fmt(r.total(i, e)), io::fmt(r.element[e]), io::fmt(r.eigenpair[i])});
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
      eig.push_back({io::fmt(s.step), io::fmt(static_cast<int>(i)), io::fmt(s.eigenvalues[i]),
                     io::fmt(s.eigenvalue_errors.size() ? s.eigenvalue_errors[i]
                                                        : std::numeric_limits<double>::quiet_NaN())});
    io::write_json(dir / step_name(s.step),
                   {{"step", s.step},
                    {"counts", s.counts},
                    {"basis_counts", s.basis_counts},
                    {"total_dof", s.total_dof},
                    {"eigenvalues", to_json(s.eigenvalues)},
                    {"eigenvalue_errors", to_json(s.eigenvalue_errors)},
                    {"eigensum_error", s.eigensum_error},
                    {"eta2", s.report.global},
                    {"eta2_element", to_json(s.report.element)},
                    {"eta2_eigenpair", to_json(s.report.eigenpair)},
                    {"quintiles", s.quintiles},
                    {"scf", {{"iterations", s.scf_iterations}, {"residual", s.scf_residual}}}},
                   meta);
  }
  io::write_csv(dir / "steps.csv",
                {"step", "total_dof", "eta2", "eigensum_error", "scf_iterations", "scf_residual", "p0", "p20", "p40",
                 "p60", "p80", "p100"},
                steps, meta);
  io::write_csv(dir / "counts.csv", {"step", "element", "requested", "built", "eta2_element"}, counts, meta);
  io::write_csv(dir / "estimator.csv",
                {"step", "element", "i", "residual", "gradient", "value", "eta2_i_element", "eta2_element",
                 "eta2_eigenpair"},
                est, meta);
  io::write_csv(dir / "eigenvalues.csv", {"step", "i", "eigenvalue", "error"}, eig, meta);
  io::write_grid(dir / "density.bin", h.final_density, h.grid, h.lengths, meta);
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_oracle(const RunConfig& cfg, const fs::path& out, std::ostream& log = std::cerr) {
  const auto dir = out / "oracle";
  const auto res = oracle_for(cfg, dir);
  log << "oracle: " << (res.cache_hit ? "cache hit" : "computed") << " (" << dir.string() << ")\n";
  for (Eigen::Index i = 0; i < res.oracle.eigenvalues.size(); ++i)
    log << "  eps_" << i << " = " << io::fmt(res.oracle.eigenvalues[i]) << "\n";
  if (cfg.oracle_self_check) {
    RunConfig fine = cfg;
    fine.oracle_multiplier *= 2;
    const int d = cfg.problem.domain.dim;
    if (product(cfg.problem.domain.global_grid) * static_cast<std::size_t>(std::pow(fine.oracle_multiplier, d)) >
        static_cast<std::size_t>(kMaxSpectralGrid)) {
      log << "oracle: self-check skipped (doubled grid exceeds the dense cap)\n";
      return 0;
    }
    const auto doubled = problem_oracle(fine.problem, fine.oracle_multiplier);
    const double diff = (doubled.eigenvalues - res.oracle.eigenvalues).cwiseAbs().maxCoeff();
    io::write_json(dir / "self_check.json", {{"grid_doubling_max_abs_diff", diff}}, {cfg.physics_hash(), "oracle"});
    log << "oracle: self-convergence under grid doubling " << io::fmt(diff) << "\n";
  }
  return 0;
}

inline int cmd_solve(const RunConfig& cfg, const fs::path& out, bool properties, std::ostream& log = std::cerr) {
  const io::Meta meta{cfg.hash(), "solve"};
  const Mesh mesh = cfg.problem.mesh();
  const auto s = solve_fixed(mesh, cfg.problem, cfg.refinement.initial);
  std::vector<io::Row> eig, est;
  for (Eigen::Index i = 0; i < s.scf.eigenvalues.size(); ++i)
    eig.push_back({io::fmt(static_cast<int>(i)), io::fmt(s.scf.eigenvalues[i])});
  io::write_csv(out / "eigenvalues.csv", {"i", "eigenvalue"}, eig, meta);
  const auto& r = s.report;
  for (Eigen::Index e = 0; e < r.element.size(); ++e)
    for (Eigen::Index i = 0; i < r.eigenpair.size(); ++i)
      est.push_back({io::fmt(static_cast<int>(e)), io::fmt(static_cast<int>(i)), io::fmt(r.residual(i, e)),
                     io::fmt(r.gradient(i, e)), io::fmt(r.value(i, e)), io::fmt(r.total(i, e)),
                     io::fmt(r.element[e]), io::fmt(r.eigenpair[i])});
  io::write_csv(out / "estimator.csv",
                {"element", "i", "residual", "gradient", "value", "eta2_i_element", "eta2_element", "eta2_eigenpair"},
                est, meta);
  io::write_grid(out / "density.bin", s.scf.rho, cfg.problem.domain.global_grid, cfg.problem.domain.lengths, meta);
  std::vector<double> gamma_alpha;  // gamma2 * alpha per element (diagnostic)
  for (std::size_t e = 0; e < s.constants.gamma2.size(); ++e)
    gamma_alpha.push_back(s.constants.gamma2[e] * s.constants.alpha[e]);
  io::write_json(out / "summary.json",
                 {{"counts", cfg.refinement.initial},
                  {"basis_counts", s.scf.family.counts()},
                  {"total_dof", s.scf.family.total_dof},
                  {"truncated", s.scf.family.truncated()},
                  {"eigenvalues", to_json(s.scf.eigenvalues)},
                  {"eta2", r.global},
                  {"positivity_shift", s.scf.shift},
                  {"gamma2_alpha", gamma_alpha},
                  {"scf", {{"iterations", s.scf.iterations}, {"residual", s.scf.residual}}}},
                 meta);
  log << "solve: total_dof " << s.scf.family.total_dof << ", scf iterations " << s.scf.iterations << ", eta^2 "
      << io::fmt(r.global) << "\n";
  if (!properties) return 0;

  nlohmann::json results = nlohmann::json::array();
  bool ok = true;
  auto record = [&](const PropertyResult& p) {
    results.push_back(p.to_json());
    ok = ok && p.pass;
    log << "property " << p.name << ": " << (p.pass ? "PASS" : "FAIL") << " (max_violation "
        << io::fmt(p.max_violation) << ")\n";
  };
  record(check_lifting_bound(mesh, s.scf.family, cfg.property_samples, cfg.seed));
  record(check_coercivity(mesh, s.scf.family, cfg.property_samples, cfg.seed));
  record(check_coercivity(mesh, s.scf.family, cfg.property_samples, cfg.seed, {0.1, cfg.problem.penalty.alpha_floor, true}));
  if (!cfg.property_ladder.empty() && cfg.oracle_enabled && cfg.problem.scf.linear()) {
    const auto oracle = oracle_for(cfg, out / "oracle").oracle;
    auto rel = check_reliability(cfg.problem, cfg.property_ladder, oracle);
    rel.seed = cfg.seed;
    record(rel);
  }
  io::write_json(out / "properties.json", results, meta);
  return ok ? 0 : 3;
}

inline std::vector<io::Row> summary_rows(const RefinementHistory& u, const RefinementHistory& nu) {
  std::vector<io::Row> rows;
  for (std::size_t k = 0; k < u.steps.size(); ++k) {
    const auto& a = u.steps[k];
    const auto& b = nu.steps[k];
    rows.push_back({io::fmt(a.step), io::fmt(a.total_dof), io::fmt(b.total_dof), io::fmt(a.eigensum_error),
                    io::fmt(b.eigensum_error), io::fmt(a.report.global), io::fmt(b.report.global)});
  }
  return rows;
}

inline int cmd_adapt(const RunConfig& cfg, const fs::path& out, std::ostream& log = std::cerr) {
  const io::Meta meta{cfg.hash(), "adapt"};
  std::optional<ReferenceScf> oracle;
  if (cfg.oracle_enabled) {
    auto res = oracle_for(cfg, out / "oracle");
    log << "adapt: oracle " << (res.cache_hit ? "cache hit" : "computed") << "\n";
    oracle = std::move(res.oracle);
  }
  const ReferenceScf* op = oracle ? &*oracle : nullptr;
  const auto uniform = run_uniform(cfg.problem, cfg.refinement, op);
  write_history(out / "uniform", uniform, cfg);
  const auto adaptive = run_adaptive(cfg.problem, cfg.refinement, op);
  write_history(out / "nonuniform", adaptive, cfg);

  const io::Row header = {"step", "dof_uniform", "dof_nonuniform", "err_uniform", "err_nonuniform", "eta2_uniform",
                          "eta2_nonuniform"};
  const auto rows = summary_rows(uniform, adaptive);
  io::write_csv(out / "summary.csv", header, rows, meta);
  for (std::size_t i = 0; i < header.size(); ++i) std::cout << (i ? "  " : "") << header[i];
  std::cout << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "  " : "") << r[i];
    std::cout << "\n";
  }
  double tu = 0.0, ta = 0.0;
  for (const auto& s : uniform.steps) tu += s.wall_seconds;
  for (const auto& s : adaptive.steps) ta += s.wall_seconds;
  log << "adapt: uniform " << tu << " s, nonuniform " << ta << " s\n";
  return 0;
}

/// Plot-ready CSVs from one history directory (or an adapt output holding
/// uniform/ and nonuniform/).
inline int cmd_report(const fs::path& dir, std::ostream& log = std::cerr) {
  if (!fs::exists(dir / "history.json")) {
    bool any = false;
    for (const char* sub : {"uniform", "nonuniform"})
      if (fs::exists(dir / sub / "history.json")) {
        cmd_report(dir / sub, log);
        any = true;
      }
    if (!any) throw ConfigError("report: no history found in '" + dir.string() + "'");
    return 0;
  }
  const auto h = io::read_json(dir / "history.json");
  const auto meta_in = io::read_json(dir / "history.json.meta.json");
  const int n = h.at("steps").get<int>();
  if (n == 0) throw ConfigError("report: history in '" + dir.string() + "' is empty");
  const io::Meta meta{meta_in.at("config_hash").get<std::string>(), "report"};
  const auto grid = h.at("grid").get<std::vector<int>>();
  const auto lengths = h.at("lengths").get<std::vector<double>>();
  double vol = 1.0, kmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    vol *= lengths[k];
    kmin = std::min(kmin, std::numbers::pi * grid[k] / lengths[k]);
  }
  const double pw = planewave_count(0.5 * kmin * kmin, vol, static_cast<int>(grid.size()));

  std::vector<io::Row> err, quint, heat;
  for (int step = 1; step <= n; ++step) {
    const auto s = io::read_json(dir / step_name(step));
    const double e = s.at("eigensum_error").is_number() ? s.at("eigensum_error").get<double>()
                                                         : std::numeric_limits<double>::quiet_NaN();
    err.push_back({io::fmt(step), io::fmt(s.at("total_dof").get<int>()), io::fmt(e), io::fmt(s.at("eta2").get<double>()),
                   io::fmt(pw)});
    io::Row q = {io::fmt(step)};
    for (double v : s.at("quintiles").get<std::vector<double>>()) q.push_back(io::fmt(v));
    quint.push_back(q);
    const auto eta = s.at("eta2_element").get<std::vector<double>>();
    const auto counts = s.at("basis_counts").get<std::vector<int>>();
    for (std::size_t k = 0; k < eta.size(); ++k)
      heat.push_back({io::fmt(step), io::fmt(k), io::fmt(counts[k]), io::fmt(eta[k])});
  }
  const auto out = dir / "report";
  io::write_csv(out / "error_vs_dof.csv", {"step", "total_dof", "eigensum_error", "eta2", "planewave_count"}, err, meta);
  io::write_csv(out / "quintiles.csv", {"step", "p0", "p20", "p40", "p60", "p80", "p100"}, quint, meta);
  io::write_csv(out / "heatmap.csv", {"step", "element", "basis_count", "eta2_element"}, heat, meta);
  log << "report: wrote " << out.string() << "\n";
  return 0;
}

}  // namespace albdg
