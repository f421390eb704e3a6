#pragma once

#include <filesystem>
#include <vector>

#include "fm/manifest.hpp"
#include "fm/sim.hpp"

namespace fm::experiment {

/// Runs every trial and writes a run directory:
///   manifest.json, config.ini, summary.csv,
///   trial_<i>/episodes.csv, trial_<i>/steps.csv
std::vector<sim::TrialResult> run_to_directory(const sim::ScenarioConfig& config, const std::filesystem::path& out,
                                               unsigned threads = 1);

/// Per-trial episode tables of a run directory, in trial order.
std::vector<std::vector<sim::EpisodeMetrics>> read_run_episodes(const std::filesystem::path& run_dir);

}  // namespace fm::experiment
