#include "fm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fm/error.hpp"

namespace fm::objectives {

void validate(const ObjectiveWeights& w) {
  for (double x : {w.harvesters, w.buyers, w.sustainability, w.fairness, w.intervention})
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("objective weights must be finite and non-negative");
}

double jain(std::span<const double> values) {
  double sum = 0.0, sq = 0.0;
  for (double x : values) {
    sum += x;
    sq += x * x;
  }
  if (!(sq > 0.0)) throw std::domain_error("Jain index undefined for an all-zero vector");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

double gini(std::span<const double> values) {
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(sum > 0.0)) throw std::domain_error("Gini coefficient undefined for zero total");
  double diff = 0.0;
  for (double a : values)
    for (double b : values) diff += std::abs(a - b);
  return diff / (2.0 * static_cast<double>(values.size()) * sum);
}

double atkinson(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(sum > 0.0)) throw std::domain_error("Atkinson index undefined for zero total");
  if (std::any_of(values.begin(), values.end(), [](double x) { return x <= 0.0; })) return 1.0;
  // geometric mean through logs; the product underflows for long vectors
  double log_sum = 0.0;
  for (double x : values) log_sum += std::log(x);
  const double geometric = std::exp(log_sum / n);
  const double arithmetic = sum / n;
  const double index = 1.0 - geometric / arithmetic;
  // constant vectors must give exactly zero
  if (std::all_of(values.begin(), values.end(), [&](double x) { return x == values.front(); })) return 0.0;
  return std::max(index, 0.0);
}

double fairness_score(std::span<const double> values, const FairnessIndex& index) {
  std::vector<double> clamped(values.begin(), values.end());
  for (double& x : clamped) x = std::max(x, 0.0);
  if (std::all_of(clamped.begin(), clamped.end(), [](double x) { return x == 0.0; })) return 1.0;
  switch (index.kind) {
    case FairnessKind::jain:
      return jain(clamped);
    case FairnessKind::gini:
      return 1.0 - gini(clamped);
    case FairnessKind::atkinson:
      return 1.0 - atkinson(clamped);
  }
  return 1.0;
}

double sustainability_term(std::span<const double> stocks, std::span<const double> equilibrium_stocks) {
  if (stocks.size() != equilibrium_stocks.size()) throw ConfigError("stock vectors differ in length");
  double worst = 0.0;
  for (std::size_t r = 0; r < stocks.size(); ++r) worst = std::min(worst, std::min(stocks[r] - equilibrium_stocks[r], 0.0));
  return worst;
}

double bin_midpoint(double v, int bins) {
  if (bins < 1) throw ConfigError("bin count must be at least 1");
  const double k = static_cast<double>(bins);
  double idx = std::floor(v * k);
  idx = std::clamp(idx, 0.0, k - 1.0);
  return (idx + 0.5) / k;
}

Matrix obfuscate(const Matrix& valuations, const ObfuscationSpec& spec, Rng& rng) {
  Matrix out = valuations;
  switch (spec.kind) {
    case ObfuscationKind::identity:
      break;
    case ObfuscationKind::bins:
      for (double& v : out.data()) v = bin_midpoint(v, spec.bins);
      break;
    case ObfuscationKind::uniform_noise: {
      if (!(spec.noise_magnitude > 0.0)) throw ConfigError("noise magnitude must be positive");
      std::uniform_real_distribution<double> noise(0.0, spec.noise_magnitude);
      for (double& v : out.data()) {
        double u = noise(rng);
        while (u == 0.0) u = noise(rng);  // open interval (0, y)
        v += u;
      }
      break;
    }
  }
  return out;
}

RewardBreakdown policymaker_reward(const RewardInputs& in, const ObjectiveWeights& w, const FairnessIndex& fairness) {
  validate(w);
  RewardBreakdown r;
  auto mean = [](std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  r.harvester_welfare = mean(in.harvester_revenues);
  r.buyer_welfare = mean(in.buyer_utilities);
  r.sustainability = sustainability_term(in.stocks, in.equilibrium_stocks);
  r.fairness = 0.5 * (fairness_score(in.harvester_revenues, fairness) + fairness_score(in.buyer_utilities, fairness));
  if (in.reference_prices) {
    const auto ref = *in.reference_prices;
    if (ref.size() != in.prices.size()) throw ConfigError("reference prices differ in length");
    for (std::size_t i = 0; i < ref.size(); ++i) r.price_gap += std::abs(in.prices[i] - ref[i]);
  } else if (w.intervention > 0.0) {
    throw ConfigError("intervention weight is positive but no reference prices were given");
  }
  r.total = w.harvesters * r.harvester_welfare + w.buyers * r.buyer_welfare + w.sustainability * r.sustainability +
            w.fairness * r.fairness - w.intervention * r.price_gap;
  return r;
}

std::optional<double> wasted_fraction(const Matrix& allocation, std::span<const double> supplies) {
  const double total = std::accumulate(supplies.begin(), supplies.end(), 0.0);
  if (!(total > 0.0)) return std::nullopt;
  const std::vector<double> sold = allocation.column_sums();
  double unsold = 0.0;
  for (std::size_t r = 0; r < supplies.size(); ++r) unsold += supplies[r] - sold[r];
  return std::clamp(unsold / total, 0.0, 1.0);
}

double leftover_budget_fraction(const Matrix& allocation, std::span<const double> prices,
                                std::span<const double> budgets) {
  const double total = std::accumulate(budgets.begin(), budgets.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("total budget must be positive");
  double left = 0.0;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    double spent = 0.0;
    for (std::size_t r = 0; r < prices.size(); ++r) spent += prices[r] * allocation(b, r);
    left += budgets[b] - spent;
  }
  return std::clamp(left / total, 0.0, 1.0);
}

}  // namespace fm::objectives
