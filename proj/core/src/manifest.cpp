#include "fm/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "fm/config.hpp"
#include "fm/error.hpp"
#include "fm/metrics_io.hpp"

namespace fm::manifest {

RunManifest make(const sim::ScenarioConfig& config) {
  RunManifest m;
  m.config_text = config::canonical_text(config);
  m.config_hash = config::git_blob_hash(m.config_text);
  m.master_seed = config.seed;
  for (std::size_t t = 0; t < config.trials; ++t)
    m.trials.push_back({t, derive_seed(config.seed, t, sim::kEnvironmentAgent, StreamTag::buyers),
                        derive_seed(config.seed, t, sim::kEnvironmentAgent, StreamTag::obfuscation)});
  m.started = utc_now();
  m.schema_version = metrics_io::kSchemaVersion;
  return m;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["config"] = m.config_text;
  j["config_hash"] = m.config_hash;
  // seeds as strings: JSON readers commonly lose precision above 2^53
  j["master_seed"] = std::to_string(m.master_seed);
  j["trials"] = nlohmann::json::array();
  for (const auto& t : m.trials)
    j["trials"].push_back({{"trial", t.trial},
                           {"buyer_seed", std::to_string(t.buyers)},
                           {"obfuscation_seed", std::to_string(t.obfuscation)}});
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["outputs"] = m.outputs;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

RunManifest read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    RunManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.config_text = j.at("config").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.master_seed = std::stoull(j.at("master_seed").get<std::string>());
    for (const auto& t : j.at("trials"))
      m.trials.push_back({t.at("trial").get<std::size_t>(), std::stoull(t.at("buyer_seed").get<std::string>()),
                          std::stoull(t.at("obfuscation_seed").get<std::string>())});
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": malformed manifest: " + e.what());
  }
}

}  // namespace fm::manifest
