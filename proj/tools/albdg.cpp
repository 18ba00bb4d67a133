#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "albdg/albdg.hpp"

namespace {

// 0 ok, 2 bad input, 3 numerical failure.
int run(int argc, char** argv) {
  CLI::App app{"Adaptive local basis DG eigensolver"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool properties = false;
  std::string report_dir;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides [output] directory)");
    sub->add_option("--seed", seed, "RNG seed (overrides [run] seed)");
    sub->add_option("--threads", threads, "worker threads (overrides [run] threads)");
  };
  auto* solve = app.add_subcommand("solve", "solve once at the initial basis counts");
  common(solve);
  solve->add_flag("--properties", properties, "also run the property checks");
  auto* adapt = app.add_subcommand("adapt", "uniform and estimator-driven refinement histories");
  common(adapt);
  auto* oracle = app.add_subcommand("oracle", "compute or reuse the spectral reference");
  common(oracle);
  auto* report = app.add_subcommand("report", "plot-ready CSVs from a history directory");
  report->add_option("dir", report_dir, "history or adapt output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (report->parsed()) return albdg::cmd_report(report_dir);

  auto cfg = albdg::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (!out.empty()) cfg.output_dir = out;
  albdg::validate(cfg);
  albdg::set_threads(cfg.threads);
  std::cerr << "config hash " << cfg.hash() << "\n";
  if (solve->parsed()) return albdg::cmd_solve(cfg, cfg.output_dir, properties);
  if (adapt->parsed()) return albdg::cmd_adapt(cfg, cfg.output_dir);
  return albdg::cmd_oracle(cfg, cfg.output_dir);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const albdg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
