#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fm {

using Rng = std::mt19937_64;

/// Purpose tags for the seed-splitting scheme. Numeric values are part of the
/// documented scheme (docs/formats.md) and must not be renumbered.
enum class StreamTag : std::uint64_t {
  buyers = 1,
  obfuscation = 2,
  agent_init = 3,
  agent_action = 4,
  agent_shuffle = 5,
  evaluation = 6,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent 64-bit seed from (master, trial, agent, tag).
/// Every random stream in a run is created through this function, so any
/// single episode can be replayed from the master seed alone.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t agent, StreamTag tag);

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, std::uint64_t agent, StreamTag tag) {
  return Rng(derive_seed(master, trial, agent, tag));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace fm
