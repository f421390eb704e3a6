#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fm/matrix.hpp"
#include "fm/rng.hpp"

// Policymaker reward composition, inequality indices, valuation obfuscation
// and the per-step market efficiency metrics.
namespace fm::objectives {

struct ObjectiveWeights {
  double harvesters = 0.0;      // w_h
  double buyers = 0.0;          // w_b
  double sustainability = 0.0;  // w_s
  double fairness = 0.0;        // w_f
  double intervention = 0.0;    // w_i
};

void validate(const ObjectiveWeights& weights);

enum class ObfuscationKind { identity, bins, uniform_noise };

struct ObfuscationSpec {
  ObfuscationKind kind = ObfuscationKind::identity;
  int bins = 10;              // k
  double noise_magnitude = 0.1;  // y
};

enum class FairnessKind { jain, gini, atkinson };

struct FairnessIndex {
  FairnessKind kind = FairnessKind::jain;
  double epsilon = 1.0;  // Atkinson inequality aversion; only 1 is supported
};

/// (sum x)^2 / (N sum x^2). Throws std::domain_error on an all-zero vector.
double jain(std::span<const double> values);

/// sum_i sum_j |x_i - x_j| / (2 N sum x). Throws std::domain_error if sum x = 0.
double gini(std::span<const double> values);

/// 1 - geometric mean / arithmetic mean (epsilon = 1). Throws
/// std::domain_error if sum x = 0; any zero entry gives exactly 1.
double atkinson(std::span<const double> values);

/// Index in "higher is fairer" orientation, in [0, 1]: Jain as is, 1 - Gini,
/// 1 - Atkinson. Negative entries are clamped to 0 first; an all-zero vector
/// counts as perfectly equal and scores 1.
double fairness_score(std::span<const double> values, const FairnessIndex& index);

/// min over r of min(s_r - S_r, 0).
double sustainability_term(std::span<const double> stocks, std::span<const double> equilibrium_stocks);

/// Applies G(.) to every valuation. The rng is only consumed for uniform_noise.
Matrix obfuscate(const Matrix& valuations, const ObfuscationSpec& spec, Rng& rng);

/// Midpoint of the bin containing v among k equal bins of [0, 1]; the last
/// bin is closed so v = 1 maps to the top midpoint.
double bin_midpoint(double v, int bins);

struct RewardInputs {
  std::span<const double> harvester_revenues;
  std::span<const double> buyer_utilities;
  std::span<const double> stocks;
  std::span<const double> equilibrium_stocks;
  std::span<const double> prices;
  std::optional<std::span<const double>> reference_prices;  // p^ME, needed when w_i > 0
};

struct RewardBreakdown {
  double harvester_welfare = 0.0;  // mean harvester revenue
  double buyer_welfare = 0.0;      // mean buyer utility
  double sustainability = 0.0;
  double fairness = 0.0;           // mean of the harvester and buyer fairness scores
  double price_gap = 0.0;          // sum_r |p_r - p^ref_r|, 0 if no reference
  double total = 0.0;
};

/// w_h mean(u_n) + w_b mean(u_b) + w_s sustainability + w_f Fair - w_i gap.
RewardBreakdown policymaker_reward(const RewardInputs& inputs, const ObjectiveWeights& weights,
                                   const FairnessIndex& fairness);

/// Unsold share of the total supply. std::nullopt when total supply is 0.
std::optional<double> wasted_fraction(const Matrix& allocation, std::span<const double> supplies);

/// Unspent share of the total budget.
double leftover_budget_fraction(const Matrix& allocation, std::span<const double> prices,
                                std::span<const double> budgets);

}  // namespace fm::objectives
