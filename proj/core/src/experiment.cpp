#include "fm/experiment.hpp"

#include <fstream>
#include <memory>

#include "fm/config.hpp"
#include "fm/error.hpp"
#include "fm/metrics_io.hpp"

namespace fm::experiment {

std::vector<sim::TrialResult> run_to_directory(const sim::ScenarioConfig& config, const std::filesystem::path& out,
                                               unsigned threads) {
  sim::validate(config);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  manifest::RunManifest m = manifest::make(config);
  {
    std::ofstream ini(out / "config.ini", std::ios::binary | std::ios::trunc);
    ini << config::to_ini(config);
    if (!ini) throw IoError("write failed for " + (out / "config.ini").string());
  }
  m.outputs = {"config.ini", "summary.csv"};
  std::vector<std::unique_ptr<metrics_io::TrialWriter>> writers;
  for (std::size_t t = 0; t < config.trials; ++t) {
    writers.push_back(std::make_unique<metrics_io::TrialWriter>(metrics_io::trial_dir(out, t), config));
    const std::string dir = metrics_io::trial_dir({}, t).string();
    m.outputs.push_back(dir + "/episodes.csv");
    m.outputs.push_back(dir + "/steps.csv");
  }
  manifest::write(out / "manifest.json", m);

  // each trial only touches its own writer
  const auto observer = [&writers](std::size_t trial, std::size_t episode, const sim::EpisodeLog& log) {
    writers[trial]->write(episode, log);
  };
  auto results = sim::run_experiment(config, observer, threads);
  for (auto& w : writers) w->close();
  metrics_io::write_summary(out / "summary.csv", results);

  m.finished = manifest::utc_now();
  manifest::write(out / "manifest.json", m);
  return results;
}

std::vector<std::vector<sim::EpisodeMetrics>> read_run_episodes(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw IoError("not a run directory: " + run_dir.string());
  std::vector<std::vector<sim::EpisodeMetrics>> trials;
  for (std::size_t t = 0;; ++t) {
    const auto path = metrics_io::trial_dir(run_dir, t) / "episodes.csv";
    if (!std::filesystem::exists(path)) break;
    trials.push_back(metrics_io::read_episodes(path));
  }
  if (trials.empty()) throw IoError("no trial_<i>/episodes.csv under " + run_dir.string());
  return trials;
}

}  // namespace fm::experiment
