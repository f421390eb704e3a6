#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fm/market.hpp"
#include "fm/matrix.hpp"
#include "fm/rng.hpp"

// Brute-force reference computations. Deliberately naive and independent of
// the production solvers they are compared against.
namespace fm::verify {

/// Maximum of sum_b beta_b log(sum_r v_br x_br) over full allocations of the
/// supplies: coarse grid over each good's split, then pairwise-transfer
/// pattern search with halving steps. Returns -inf if no allocation gives
/// every buyer positive utility.
double eg_grid_maximum(const market::MarketInstance& instance, int coarse_resolution = 6, double final_step = 1e-10);

/// Best of max sum v_br x_br s.t. budget and supply rows, x >= 0, found by
/// solving every square subsystem of active constraints.
struct VertexOptimum {
  double objective = 0.0;
  Matrix allocation;
  std::size_t vertices = 0;  // feasible vertices seen
};
VertexOptimum welfare_by_vertex_enumeration(const market::MarketInstance& instance, std::span<const double> prices);

/// Central differences of f at x.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double step = 1e-6);

/// Plain re-implementation of one resource under the stock dynamics:
/// returns the stock path s_0..s_T and harvests, with all harvesters'
/// effective effort summed into `effective_effort`.
struct StockPath {
  std::vector<double> stocks;
  std::vector<double> harvests;
  bool depleted = false;
};
StockPath simulate_stock(double equilibrium, double growth, double initial, double effective_effort,
                         std::size_t steps, double depletion_threshold);

/// M_s K N with K = e^g Phi / (2 (e^g - 1)), by direct evaluation.
double equilibrium_stock_formula(double scarcity, std::size_t harvesters, double growth, double max_effort);

/// Scan of constant efforts k / (levels - 1) * max_effort for one harvester
/// with skill 1 on one resource at a fixed price: total revenue per episode.
struct EffortScan {
  std::vector<double> efforts;
  std::vector<double> revenues;
  double best_effort = 0.0;
  double best_revenue = 0.0;
};
EffortScan constant_effort_scan(double scarcity, double price, std::size_t steps, std::size_t levels = 101,
                                double max_effort = 1.0, double growth = 1.0, double depletion_threshold = 1e-4);

/// Random market with B x R entries: budgets in (0, 1], valuations in
/// (0, 1), supplies in (0, 1].
market::MarketInstance random_market(std::size_t buyers, std::size_t resources, Rng& rng);

}  // namespace fm::verify
