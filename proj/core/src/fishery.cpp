#include "fm/fishery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fm/error.hpp"

namespace fm::fishery {

void validate(const ResourceParams& params) {
  if (!(params.equilibrium_stock > 0.0) || !std::isfinite(params.equilibrium_stock))
    throw ConfigError("equilibrium_stock must be positive and finite");
  if (!(params.growth_rate > 0.0) || !std::isfinite(params.growth_rate))
    throw ConfigError("growth_rate must be positive and finite");
  if (!(params.initial_stock >= 0.0) || !std::isfinite(params.initial_stock))
    throw ConfigError("initial_stock must be non-negative and finite");
}

void validate(const HarvesterParams& harvester, std::size_t resources) {
  if (harvester.skills.size() != resources)
    throw ConfigError("harvester has " + std::to_string(harvester.skills.size()) + " skills, expected " +
                      std::to_string(resources));
  for (double s : harvester.skills)
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("skill outside [0, 1]");
  if (!(harvester.cost_per_step >= 0.0)) throw ConfigError("negative harvesting cost");
}

double catchability(double stock, const ResourceParams& params) {
  const double cap = 2.0 * params.equilibrium_stock;
  if (stock <= cap) return stock / cap;
  return 1.0;
}

double total_harvest(double total_effort, double stock, const ResourceParams& params) {
  const double h = catchability(stock, params) * total_effort;
  if (h <= stock) return h;
  return stock;
}

double spawner_recruit(double escapement, const ResourceParams& params) {
  return escapement * std::exp(params.growth_rate * (1.0 - escapement / params.equilibrium_stock));
}

std::pair<ResourceState, HarvestOutcome> step(const ResourceState& state, const Matrix& efforts,
                                              std::span<const HarvesterParams> harvesters,
                                              std::span<const ResourceParams> resources) {
  const std::size_t n = harvesters.size();
  const std::size_t r = resources.size();
  if (state.stocks.size() != r) throw ConfigError("stock vector does not match resource count");
  if (efforts.rows() != n || efforts.cols() != r)
    throw ConfigError("effort matrix is " + std::to_string(efforts.rows()) + "x" + std::to_string(efforts.cols()) +
                      ", expected " + std::to_string(n) + "x" + std::to_string(r));
  for (const auto& h : harvesters) validate(h, r);
  for (double e : efforts.data())
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("effort must be finite and non-negative");

  HarvestOutcome out{Matrix(n, r), std::vector<double>(r, 0.0), Matrix(n, r), std::vector<double>(r, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      out.effective_efforts(i, j) = efforts(i, j) * harvesters[i].skills[j];
      out.total_efforts[j] += out.effective_efforts(i, j);
    }

  ResourceState next{std::vector<double>(r, 0.0), state.time_step + 1};
  for (std::size_t j = 0; j < r; ++j) {
    const double stock = state.stocks[j];
    const double harvest = total_harvest(out.total_efforts[j], stock, resources[j]);
    out.total_harvest[j] = harvest;
    if (out.total_efforts[j] > 0.0) {
      for (std::size_t i = 0; i < n; ++i)
        out.individual_harvest(i, j) = out.effective_efforts(i, j) / out.total_efforts[j] * harvest;
    }
    // round-off guard; harvest never exceeds stock analytically
    next.stocks[j] = spawner_recruit(std::max(stock - harvest, 0.0), resources[j]);
  }
  return {std::move(next), std::move(out)};
}

std::vector<double> revenue(std::span<const double> prices, const HarvestOutcome& outcome,
                            std::span<const HarvesterParams> harvesters) {
  const std::size_t n = outcome.individual_harvest.rows();
  const std::size_t r = outcome.individual_harvest.cols();
  if (prices.size() != r) throw ConfigError("price vector does not match resource count");
  if (harvesters.size() != n) throw ConfigError("harvester list does not match harvest outcome");
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < r; ++j) total += prices[j] * outcome.individual_harvest(i, j);
    u[i] = total - harvesters[i].cost_per_step;
  }
  return u;
}

double equilibrium_stock(double scarcity, std::size_t harvesters, double growth_rate, double max_effort) {
  if (!(scarcity > 0.0) || harvesters == 0 || !(growth_rate > 0.0) || !(max_effort > 0.0))
    throw ConfigError("equilibrium_stock inputs must be positive");
  const double eg = std::exp(growth_rate);
  const double k = eg * max_effort / (2.0 * (eg - 1.0));
  return scarcity * k * static_cast<double>(harvesters);
}

bool is_depleted(const ResourceState& state, double threshold) {
  return std::any_of(state.stocks.begin(), state.stocks.end(), [threshold](double s) { return s < threshold; });
}

}  // namespace fm::fishery
