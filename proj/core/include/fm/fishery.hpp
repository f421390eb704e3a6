#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fm/matrix.hpp"

// Bio-economic dynamics of a multi-resource common fishery. Harvest depends
// on the effort exerted and on a stock-dependent catchability; the escapement
// regrows through a Ricker-type spawner-recruit map.
namespace fm::fishery {

struct ResourceParams {
  double equilibrium_stock = 1.0;  // S_eq, the unharvested fixed point
  double growth_rate = 1.0;
  double initial_stock = 1.0;
};

struct ResourceState {
  std::vector<double> stocks;
  std::size_t time_step = 0;
};

struct HarvesterParams {
  std::vector<double> skills;  // per resource, in [0, 1]
  double cost_per_step = 0.0;
};

struct HarvestOutcome {
  Matrix individual_harvest;  // N x R
  std::vector<double> total_harvest;
  Matrix effective_efforts;  // effort times skill, N x R
  std::vector<double> total_efforts;
};

/// Checks the documented invariants; throws ConfigError.
void validate(const ResourceParams& params);
void validate(const HarvesterParams& harvester, std::size_t resources);

/// stock / (2 S_eq), saturating at 1.
double catchability(double stock, const ResourceParams& params);

/// q(s) E, capped at the available stock.
double total_harvest(double total_effort, double stock, const ResourceParams& params);

/// x exp(g (1 - x / S_eq)).
double spawner_recruit(double escapement, const ResourceParams& params);

/// Advances every resource by one time step under the given N x R efforts.
std::pair<ResourceState, HarvestOutcome> step(const ResourceState& state, const Matrix& efforts,
                                              std::span<const HarvesterParams> harvesters,
                                              std::span<const ResourceParams> resources);

/// Per-harvester revenue summed over resources, minus the per-step cost.
std::vector<double> revenue(std::span<const double> prices, const HarvestOutcome& outcome,
                            std::span<const HarvesterParams> harvesters);

/// S_eq = M_s K N with K = e^g Phi_max / (2 (e^g - 1)).
double equilibrium_stock(double scarcity, std::size_t harvesters, double growth_rate, double max_effort);

/// True iff some stock is strictly below the threshold.
bool is_depleted(const ResourceState& state, double threshold);

}  // namespace fm::fishery
