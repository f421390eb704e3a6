// fmlab: run experiments, compare runs, verify the solvers, emit plot data.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fm/config.hpp"
#include "fm/error.hpp"
#include "fm/experiment.hpp"
#include "fm/metrics_io.hpp"
#include "fm/stats.hpp"
#include "fm/text.hpp"
#include "fm/verify/checks.hpp"

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config_path;
  std::string out = "runs/latest";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> episodes;
  std::string pricing;
  std::string scenario = "plentiful";
  unsigned threads = 1;
};

int cmd_run(const RunOptions& o) {
  fm::sim::ScenarioConfig config = fm::config::preset(o.scenario);
  if (!o.config_path.empty()) fm::config::apply(fm::config::read_file(o.config_path), config);
  if (o.seed) config.seed = *o.seed;
  if (o.trials) config.trials = *o.trials;
  if (o.episodes) config.episodes = *o.episodes;
  if (o.pricing == "me") config.pricing = fm::sim::PricingMode::market_equilibrium;
  else if (o.pricing == "policymaker") config.pricing = fm::sim::PricingMode::policymaker;
  fm::sim::validate(config);

  std::cerr << "config hash " << fm::config::config_hash(config) << ", " << config.trials << " trial(s) x "
            << config.episodes << " episode(s) -> " << o.out << "\n";
  const auto results = fm::experiment::run_to_directory(config, o.out, o.threads);
  for (const auto& r : results)
    std::printf("trial %zu: harvester_welfare %.6g buyer_welfare %.6g depletion %.4g min_length %g\n", r.trial,
                r.summary[fm::sim::Metric::harvester_welfare], r.summary[fm::sim::Metric::buyer_welfare],
                r.depletion_frequency, r.min_length);
  return 0;
}

int cmd_compare(const std::string& baseline, const std::string& treatment, const std::string& out) {
  const auto a = fm::metrics_io::read_summary(fs::path(baseline) / "summary.csv");
  const auto b = fm::metrics_io::read_summary(fs::path(treatment) / "summary.csv");
  const auto report = fm::stats::compare(a, b);
  std::cout << fm::stats::format_table(report);
  if (!out.empty()) {
    fm::metrics_io::Table t{{"metric", "baseline_mean", "treatment_mean", "relative_difference_pct", "p_value",
                             "baseline_trials", "treatment_trials"},
                            {}};
    for (const auto& r : report.rows)
      t.rows.push_back({r.metric, fm::text::format_double(r.baseline_mean), fm::text::format_double(r.treatment_mean),
                        fm::text::format_double(r.relative_difference), fm::text::format_double(r.p_value),
                        std::to_string(report.baseline_trials), std::to_string(report.treatment_trials)});
    fm::metrics_io::write_table(out, t);
  }
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : fm::verify::run_all(seed)) {
    std::printf("[%s] %s (%.2f s): %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.summary.c_str());
    for (const auto& f : r.failures) std::printf("    %s\n", f.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_plot_data(const std::string& run_dir, const std::string& out) {
  const auto trials = fm::experiment::read_run_episodes(run_dir);
  const auto table = fm::metrics_io::plot_data(trials);
  const fs::path path = out.empty() ? fs::path(run_dir) / "plot_data.csv" : fs::path(out);
  fm::metrics_io::write_table(path, table);
  std::cerr << table.rows.size() << " rows from " << trials.size() << " trial(s) -> " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fishery and market simulation with learning harvesters and a learning price setter"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Train agents and write a run directory");
  run_cmd->add_option("--config", run.config_path, "Config file (key = value under [sections])")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--trials", run.trials, "Number of independent trials")->check(CLI::PositiveNumber);
  run_cmd->add_option("--episodes", run.episodes, "Episodes per trial")->check(CLI::PositiveNumber);
  run_cmd->add_option("--pricing", run.pricing, "Pricing mode")->check(CLI::IsMember({"me", "policymaker"}));
  run_cmd->add_option("--scenario", run.scenario, "Preset the config file starts from")
      ->check(CLI::IsMember({"plentiful", "scarce"}))
      ->capture_default_str();
  run_cmd->add_option("--threads", run.threads, "Trials run concurrently")->check(CLI::PositiveNumber);

  std::string baseline, treatment, compare_out;
  auto* cmp = app.add_subcommand("compare", "Compare a treatment run against a baseline run");
  cmp->add_option("baseline", baseline, "Baseline run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("treatment", treatment, "Treatment run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--out", compare_out, "Also write the report as CSV here");

  std::uint64_t verify_seed = 0;
  auto* ver = app.add_subcommand("verify", "Run the property and oracle suites");
  ver->add_option("--seed", verify_seed, "Seed for the randomized checks")->capture_default_str();

  std::string plot_dir, plot_out;
  auto* plot = app.add_subcommand("plot-data", "Per-episode mean and std across trials");
  plot->add_option("run", plot_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", plot_out, "Output CSV (default: <run>/plot_data.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help exits 0
  }
  try {
    if (*run_cmd) return cmd_run(run);
    if (*cmp) return cmd_compare(baseline, treatment, compare_out);
    if (*ver) return cmd_verify(verify_seed);
    if (*plot) return cmd_plot_data(plot_dir, plot_out);
  } catch (const fm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
