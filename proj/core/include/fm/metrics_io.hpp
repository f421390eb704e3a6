#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "fm/sim.hpp"

// Comma-separated metric tables. Layout and columns are documented in
// docs/formats.md; kSchemaVersion changes whenever a column does.
namespace fm::metrics_io {

inline constexpr int kSchemaVersion = 1;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Throws IoError with the path on failure. Cells never contain commas.
void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

/// episode, then one column per metric in kMetricNames order.
std::vector<std::string> episode_header();
std::vector<std::string> episode_row(std::size_t episode, const sim::EpisodeMetrics& metrics);
std::vector<sim::EpisodeMetrics> parse_episodes(const Table& table);

void write_episodes(const std::filesystem::path& path, std::span<const sim::EpisodeMetrics> episodes);
std::vector<sim::EpisodeMetrics> read_episodes(const std::filesystem::path& path);

/// Column names of the step table for a scenario of this size.
std::vector<std::string> step_header(std::size_t harvesters, std::size_t resources, std::size_t buyers);
std::vector<std::string> step_row(std::size_t episode, const sim::StepRecord& step);

/// Streams one trial's episodes.csv and steps.csv. Headers are written on
/// construction, so a trial with no episodes leaves header-only files.
class TrialWriter {
 public:
  TrialWriter(const std::filesystem::path& dir, const sim::ScenarioConfig& config);
  void write(std::size_t episode, const sim::EpisodeLog& log);
  void close();

 private:
  std::filesystem::path dir_;
  std::ofstream episodes_;
  std::ofstream steps_;
};

/// trial, every metric's window mean, depletion_frequency, min_length.
void write_summary(const std::filesystem::path& path, std::span<const sim::TrialResult> trials);
/// Per-trial window means (metric columns only).
std::vector<sim::EpisodeMetrics> read_summary(const std::filesystem::path& path);

/// Per-episode mean and sample standard deviation (0 for a single trial)
/// of every metric across trials. Trials must have equal episode counts.
Table plot_data(std::span<const std::vector<sim::EpisodeMetrics>> trials);

std::filesystem::path trial_dir(const std::filesystem::path& run_dir, std::size_t trial);

}  // namespace fm::metrics_io
