#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fm/matrix.hpp"

// Linear Fisher market: buyers with budgets and per-unit valuations, divisible
// goods with fixed supplies.
namespace fm::market {

struct MarketInstance {
  std::vector<double> budgets;  // B
  Matrix valuations;            // B x R
  std::vector<double> supplies; // R
};

struct MarketOutcome {
  std::vector<double> prices;  // R
  Matrix allocation;           // B x R
  std::vector<double> buyer_utilities;
};

struct SolverOptions {
  double tolerance = 1e-8;  // on the largest bid change, relative to the good's revenue
  std::size_t max_iterations = 100000;
};

/// Throws ConfigError unless budgets are positive, valuations and supplies
/// non-negative and all dimensions agree.
void validate(const MarketInstance& instance);

/// sum_r v_br x_br for every buyer.
std::vector<double> utilities(const Matrix& allocation, const Matrix& valuations);

/// Competitive equilibrium of the linear Fisher market (the maximizer of the
/// Eisenberg-Gale program, prices being the supply multipliers).
///
/// Runs proportional-response bid dynamics. Whenever the bids have settled
/// enough to reveal the spending graph, prices are recovered exactly from the
/// valuation ratios along that graph and an allocation is computed by max flow
/// over the maximum-bang-per-buck edges; the first such candidate that passes
/// the equilibrium conditions is returned.
///
/// Goods with zero supply, or that nobody values, are priced at 0. Buyers that
/// value none of the remaining goods receive nothing.
/// Throws SolverError if neither route converges within max_iterations.
MarketOutcome solve_equilibrium(const MarketInstance& instance, const SolverOptions& options = {});

/// sum_b beta_b log u_b. std::nullopt stands for minus infinity (some u_b = 0).
std::optional<double> eg_objective(const Matrix& allocation, const MarketInstance& instance);

/// Welfare-maximizing allocation at externally given prices: maximize the sum
/// of buyer utilities subject to each buyer's budget and each good's supply.
MarketOutcome allocate_at_prices(const MarketInstance& instance, std::span<const double> prices);

/// Worst-case violations of the equilibrium conditions. Buyers who value no
/// priced good are ignored, as are goods with zero price.
struct EquilibriumResiduals {
  double clearance = 0.0;      // |sum_b x_br - e_r| over goods with p_r > 0
  double budget = 0.0;         // |sum_r p_r x_br - beta_b|
  double bang_per_buck = 0.0;  // max_j v_bj/p_j - v_br/p_r over bought goods
  double worst() const;
};

EquilibriumResiduals equilibrium_residuals(const MarketInstance& instance, const MarketOutcome& outcome,
                                           double support_tolerance = 1e-9);

}  // namespace fm::market
