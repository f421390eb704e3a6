#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fm/sim.hpp"

namespace fm::manifest {

struct TrialSeeds {
  std::size_t trial = 0;
  std::uint64_t buyers = 0;
  std::uint64_t obfuscation = 0;
};

/// What produced a run directory.
struct RunManifest {
  std::string config_text;  // canonical `section.key=value` lines
  std::string config_hash;  // git blob SHA-1 of config_text
  std::uint64_t master_seed = 0;
  std::vector<TrialSeeds> trials;
  std::string started;   // UTC, ISO 8601
  std::string finished;  // empty while running
  std::vector<std::string> outputs;  // paths relative to the run directory
  int schema_version = 1;
};

RunManifest make(const sim::ScenarioConfig& config);
std::string utc_now();

void write(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read(const std::filesystem::path& path);

}  // namespace fm::manifest
