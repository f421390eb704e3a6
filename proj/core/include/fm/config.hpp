#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "fm/sim.hpp"

// Scenario configuration files: `key = value` lines under `[section]`
// headers, `#` comments. See docs/formats.md for the schema.
namespace fm::config {

/// Flat view keyed by "section.key".
using KeyValues = std::map<std::string, std::string>;

/// Throws ConfigError (with the line number) on malformed lines or repeated keys.
KeyValues parse(std::string_view text);
KeyValues read_file(const std::filesystem::path& path);

/// "plentiful" (M_s = 0.8) or "scarce" (M_s = 0.45); ConfigError otherwise.
sim::ScenarioConfig preset(std::string_view name);

/// Overrides fields of `config`. Unknown keys and unparsable values throw
/// ConfigError. The result is validated.
void apply(const KeyValues& values, sim::ScenarioConfig& config);

/// Every field of `config` as canonical strings.
KeyValues to_key_values(const sim::ScenarioConfig& config);

/// Sorted `section.key=value` lines; the input to the config hash.
std::string canonical_text(const sim::ScenarioConfig& config);

/// The same config as an ini file, loadable by read_file/apply.
std::string to_ini(const sim::ScenarioConfig& config);

/// SHA-1 over "blob <len>\0<text>", as git hashes file contents. Hex, lower case.
std::string git_blob_hash(std::string_view text);

/// git_blob_hash(canonical_text(config)).
std::string config_hash(const sim::ScenarioConfig& config);

}  // namespace fm::config
