#pragma once

// Run configuration: an INI file with named sections and key = value entries.
//
//   [domain]      lengths, global_grid
//   [mesh]        elements, lgl_order
//   [basis]       initial_counts, svd_tol, constant_mode, local_refine, local_count
//   [potential]   electrons, constant_shift
//   [well.*]      center, depth, width      (one section per well)
//   [scf]         mixing, tol, max_iter, hartree, xc, positivity_floor, freeze_basis_after
//   [penalty]     gamma, mode, cj_factor, alpha_floor
//   [refinement]  eps_min, eps_max, b_step, steps, j_max
//   [oracle]      enabled, grid_multiplier, self_check
//   [properties]  samples, ladder
//   [output]      directory
//   [run]         seed, threads

#include <cmath>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "albdg/error.hpp"
#include "albdg/refinement.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  Problem problem;
  RefinementConfig refinement;
  bool oracle_enabled = true;
  int oracle_multiplier = 2;
  bool oracle_self_check = false;
  int property_samples = 100;
  std::vector<int> property_ladder;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  nlohmann::json to_json() const;
  std::string hash() const;          // whole run
  std::string physics_hash() const;  // what the oracle depends on
};

/// FNV-1a, 64 bit, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"domain", {"lengths", "global_grid"}},
      {"mesh", {"elements", "lgl_order"}},
      {"basis", {"initial_counts", "svd_tol", "constant_mode", "local_refine", "local_count"}},
      {"potential", {"electrons", "constant_shift"}},
      {"well", {"center", "depth", "width"}},
      {"scf", {"mixing", "tol", "max_iter", "hartree", "xc", "positivity_floor", "freeze_basis_after"}},
      {"penalty", {"gamma", "mode", "cj_factor", "alpha_floor"}},
      {"refinement", {"eps_min", "eps_max", "b_step", "steps", "j_max"}},
      {"oracle", {"enabled", "grid_multiplier", "self_check"}},
      {"properties", {"samples", "ladder"}},
      {"output", {"directory"}},
      {"run", {"seed", "threads"}},
  };
  return k;
}

inline std::string section_kind(const std::string& name) {
  return name.rfind("well", 0) == 0 ? "well" : name;
}

class Reader {
 public:
  Reader(const ptree& root, std::string source) : root_(root), source_(std::move(source)) {}

  const ptree* section(const std::string& name) const {
    for (const auto& [key, child] : root_)
      if (key == name) return &child;
    return nullptr;
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": [" + sec + "] " + key + ": " + what);
  }

  std::string raw(const std::string& sec, const std::string& key, bool required, bool& found) const {
    found = false;
    const ptree* s = section(sec);
    if (s) {
      for (const auto& [k, v] : *s)
        if (k == key) {
          found = true;
          return v.data();
        }
    }
    if (required) fail(sec, key, "missing required field");
    return {};
  }

  template <class T>
  T scalar(const std::string& sec, const std::string& key, T fallback, bool required = false) const {
    bool found = false;
    const auto text = raw(sec, key, required, found);
    if (!found) return fallback;
    return parse<T>(sec, key, text);
  }

  template <class T>
  std::vector<T> list(const std::string& sec, const std::string& key, std::vector<T> fallback,
                      bool required = false) const {
    bool found = false;
    auto text = raw(sec, key, required, found);
    if (!found) return fallback;
    for (char& c : text)
      if (c == ',') c = ' ';
    std::istringstream in(text);
    std::vector<T> out;
    std::string tok;
    while (in >> tok) out.push_back(parse<T>(sec, key, tok));
    if (out.empty()) fail(sec, key, "expected at least one value");
    return out;
  }

  template <class T>
  T parse(const std::string& sec, const std::string& key, const std::string& text) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      fail(sec, key, "expected a boolean, got '" + text + "'");
    } else {
      std::istringstream in(text);
      T v{};
      in >> v;
      std::string rest;
      if (in.fail() || (in >> rest)) fail(sec, key, "cannot parse '" + text + "'");
      return v;
    }
  }

 private:
  const ptree& root_;
  std::string source_;
};

template <class T>
std::vector<T> broadcast(const std::vector<T>& v, std::size_t n, const std::string& what) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<T>(n, v[0]);
  throw ConfigError(what + ": expected 1 or " + std::to_string(n) + " values, got " + std::to_string(v.size()));
}

}  // namespace detail

/// Cross-field checks run before any computation.
inline void validate(const RunConfig& c) {
  const auto& p = c.problem;
  p.domain.validate();
  const int d = p.domain.dim;
  for (int g : p.domain.global_grid) require(g % 2 == 0, "[domain] global_grid: must be even");
  require(static_cast<int>(p.element_counts.size()) == d, "[mesh] elements: one entry per axis");
  require(static_cast<int>(p.lgl_orders.size()) == d, "[mesh] lgl_order: one entry per axis");
  for (int m : p.element_counts) require(m >= 1, "[mesh] elements: must be >= 1");
  for (int o : p.lgl_orders) require(o >= 3, "[mesh] lgl_order: must be >= 3");
  p.potential.validate(d);
  p.scf.validate();
  require(p.basis.svd_tol > 0.0 && p.basis.svd_tol < 1.0, "[basis] svd_tol: must be in (0, 1)");
  require(p.basis.local_refine >= 1, "[basis] local_refine: must be >= 1");
  require(p.basis.local_count >= 1, "[basis] local_count: must be >= 1");
  require(p.penalty.gamma > 0.0, "[penalty] gamma: must be positive");
  require(p.penalty.alpha_floor > 0.0, "[penalty] alpha_floor: must be positive");
  require(p.penalty.cj_factor > 0.0, "[penalty] cj_factor: must be positive");
  const int m = p.num_elements();
  require(static_cast<int>(c.refinement.initial.size()) == m, "[basis] initial_counts: one value or one per element");
  require(c.refinement.j_max <= p.basis.local_count, "[refinement] j_max: must not exceed [basis] local_count");
  c.refinement.validate(m);
  int total = 0;
  for (int j : c.refinement.initial) total += j;
  require(p.potential.electrons <= total,
          "[potential] electrons: " + std::to_string(p.potential.electrons) + " exceeds the initial total_dof " +
              std::to_string(total));
  require(c.refinement.j_max * m <= kMaxDenseDof, "[refinement] j_max: j_max * elements exceeds the dense dof cap");
  const auto mesh = build_mesh(p.domain, p.element_counts, p.lgl_orders);
  const auto q = extended_element(mesh, 0, p.basis.local_refine);
  require(product(q.grid) <= static_cast<std::size_t>(kMaxSpectralGrid),
          "[basis] local_refine: extended-element grid has " + std::to_string(product(q.grid)) + " points (cap " +
              std::to_string(kMaxSpectralGrid) + ")");
  require(c.refinement.j_max <= static_cast<int>(product(q.grid)), "[refinement] j_max: exceeds local grid size");
  require(c.oracle_multiplier >= 1, "[oracle] grid_multiplier: must be >= 1");
  if (c.oracle_enabled)
    require(product(p.domain.global_grid) * static_cast<std::size_t>(std::pow(c.oracle_multiplier, d)) <=
                static_cast<std::size_t>(kMaxSpectralGrid),
            "[oracle] grid_multiplier: oracle grid exceeds the dense cap");
  require(c.property_samples >= 1, "[properties] samples: must be >= 1");
  for (int j : c.property_ladder) require(j >= 1 && j <= p.basis.local_count, "[properties] ladder: J out of range");
  require(c.threads >= 1, "[run] threads: must be >= 1");
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  detail::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  // Unknown sections and keys are errors (typos must not silently fall back).
  for (const auto& [name, sec] : root) {
    if (sec.empty() && !sec.data().empty())
      throw ConfigError(source + ": key '" + name + "' outside of any section");
    const auto kind = detail::section_kind(name);
    const auto it = detail::known_keys().find(kind);
    if (it == detail::known_keys().end()) throw ConfigError(source + ": unknown section [" + name + "]");
    for (const auto& [key, value] : sec)
      if (!it->second.count(key)) throw ConfigError(source + ": [" + name + "] " + key + ": unknown field");
  }

  const detail::Reader r(root, source);
  RunConfig c;
  auto& p = c.problem;
  p.domain.lengths = r.list<double>("domain", "lengths", {}, true);
  p.domain.dim = static_cast<int>(p.domain.lengths.size());
  const auto n = static_cast<std::size_t>(p.domain.dim);
  p.domain.global_grid = detail::broadcast(r.list<int>("domain", "global_grid", {}, true), n, "[domain] global_grid");
  p.element_counts = detail::broadcast(r.list<int>("mesh", "elements", {}, true), n, "[mesh] elements");
  p.lgl_orders = detail::broadcast(r.list<int>("mesh", "lgl_order", {}, true), n, "[mesh] lgl_order");

  p.basis.svd_tol = r.scalar("basis", "svd_tol", p.basis.svd_tol);
  p.basis.enforce_constant_mode = r.scalar("basis", "constant_mode", p.basis.enforce_constant_mode);
  p.basis.local_refine = r.scalar("basis", "local_refine", p.basis.local_refine);
  p.basis.local_count = r.scalar("basis", "local_count", p.basis.local_count);

  p.potential.electrons = r.scalar("potential", "electrons", 0, true);
  p.potential.constant_shift = r.scalar("potential", "constant_shift", 0.0);
  for (const auto& [name, sec] : root) {
    if (detail::section_kind(name) != "well") continue;
    Well w;
    w.center = r.list<double>(name, "center", {}, true);
    w.depth = r.scalar(name, "depth", 0.0, true);
    w.width = r.scalar(name, "width", 0.0, true);
    p.potential.wells.push_back(w);
  }

  p.scf.mixing = r.scalar("scf", "mixing", p.scf.mixing);
  p.scf.tol = r.scalar("scf", "tol", p.scf.tol);
  p.scf.max_iter = r.scalar("scf", "max_iter", p.scf.max_iter);
  p.scf.hartree = r.scalar("scf", "hartree", p.scf.hartree);
  p.scf.xc = r.scalar("scf", "xc", p.scf.xc);
  p.scf.positivity_floor = r.scalar("scf", "positivity_floor", p.scf.positivity_floor);
  p.scf.freeze_basis_after = r.scalar("scf", "freeze_basis_after", p.scf.freeze_basis_after);

  p.penalty.gamma = r.scalar("penalty", "gamma", p.penalty.gamma);
  const auto mode = r.scalar<std::string>("penalty", "mode", "formula");
  if (mode == "formula")
    p.penalty.mode = PenaltyMode::formula;
  else if (mode == "cj_condition")
    p.penalty.mode = PenaltyMode::cj_condition;
  else
    r.fail("penalty", "mode", "expected 'formula' or 'cj_condition', got '" + mode + "'");
  p.penalty.cj_factor = r.scalar("penalty", "cj_factor", p.penalty.cj_factor);
  p.penalty.alpha_floor = r.scalar("penalty", "alpha_floor", p.penalty.alpha_floor);

  int m = 1;
  for (int e : p.element_counts) m *= std::max(e, 1);
  c.refinement.initial = detail::broadcast(r.list<int>("basis", "initial_counts", {}, true),
                                           static_cast<std::size_t>(m), "[basis] initial_counts");
  c.refinement.eps_min = r.scalar("refinement", "eps_min", c.refinement.eps_min);
  c.refinement.eps_max = r.scalar("refinement", "eps_max", c.refinement.eps_max);
  c.refinement.b_step = r.scalar("refinement", "b_step", c.refinement.b_step);
  c.refinement.steps = r.scalar("refinement", "steps", c.refinement.steps);
  c.refinement.j_max = r.scalar("refinement", "j_max", p.basis.local_count);

  c.oracle_enabled = r.scalar("oracle", "enabled", c.oracle_enabled);
  c.oracle_multiplier = r.scalar("oracle", "grid_multiplier", c.oracle_multiplier);
  c.oracle_self_check = r.scalar("oracle", "self_check", c.oracle_self_check);
  c.property_samples = r.scalar("properties", "samples", c.property_samples);
  c.property_ladder = r.list<int>("properties", "ladder", {});
  c.output_dir = r.scalar<std::string>("output", "directory", c.output_dir);
  c.seed = r.scalar<std::uint64_t>("run", "seed", c.seed);
  c.threads = r.scalar("run", "threads", c.threads);

  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline nlohmann::json RunConfig::to_json() const {
  const auto& p = problem;
  nlohmann::json wells = nlohmann::json::array();
  for (const auto& w : p.potential.wells) wells.push_back({{"center", w.center}, {"depth", w.depth}, {"width", w.width}});
  return {
      {"domain", {{"lengths", p.domain.lengths}, {"global_grid", p.domain.global_grid}}},
      {"mesh", {{"elements", p.element_counts}, {"lgl_order", p.lgl_orders}}},
      {"basis",
       {{"initial_counts", refinement.initial},
        {"svd_tol", p.basis.svd_tol},
        {"constant_mode", p.basis.enforce_constant_mode},
        {"local_refine", p.basis.local_refine},
        {"local_count", p.basis.local_count}}},
      {"potential", {{"electrons", p.potential.electrons}, {"constant_shift", p.potential.constant_shift}, {"wells", wells}}},
      {"scf",
       {{"mixing", p.scf.mixing},
        {"tol", p.scf.tol},
        {"max_iter", p.scf.max_iter},
        {"hartree", p.scf.hartree},
        {"xc", p.scf.xc},
        {"positivity_floor", p.scf.positivity_floor},
        {"freeze_basis_after", p.scf.freeze_basis_after}}},
      {"penalty",
       {{"gamma", p.penalty.gamma},
        {"mode", p.penalty.mode == PenaltyMode::formula ? "formula" : "cj_condition"},
        {"cj_factor", p.penalty.cj_factor},
        {"alpha_floor", p.penalty.alpha_floor}}},
      {"refinement",
       {{"eps_min", refinement.eps_min},
        {"eps_max", refinement.eps_max},
        {"b_step", refinement.b_step},
        {"steps", refinement.steps},
        {"j_max", refinement.j_max}}},
      {"oracle", {{"enabled", oracle_enabled}, {"grid_multiplier", oracle_multiplier}, {"self_check", oracle_self_check}}},
      {"properties", {{"samples", property_samples}, {"ladder", property_ladder}}},
      {"run", {{"seed", seed}}},
  };
}

// Output directory and thread count do not change results, so they are not hashed.
inline std::string RunConfig::hash() const { return fnv1a_hex(to_json().dump()); }

inline std::string RunConfig::physics_hash() const {
  const auto j = to_json();
  nlohmann::json sub = {{"domain", j["domain"]}, {"potential", j["potential"]}, {"scf", j["scf"]},
                        {"oracle_multiplier", oracle_multiplier}};
  return fnv1a_hex(sub.dump());
}

}  // namespace albdg
