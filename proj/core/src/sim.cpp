#include "fm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <string>

#include "fm/error.hpp"

namespace fm::sim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::optional<double> index_or_none(std::span<const double> values, double (*index)(std::span<const double>)) {
  std::vector<double> clamped(values.begin(), values.end());
  for (double& x : clamped) x = std::max(x, 0.0);
  if (!(sum(clamped) > 0.0)) return std::nullopt;
  return index(clamped);
}

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.harvesters == 0 || c.resources == 0 || c.buyers == 0)
    throw ConfigError("harvesters, resources and buyers must be at least 1");
  if (!(c.scarcity > 0.0)) throw ConfigError("scarcity multiplier must be positive");
  if (!(c.growth_rate > 0.0) || !(c.max_effort > 0.0)) throw ConfigError("growth rate and max effort must be positive");
  if (c.max_steps == 0) throw ConfigError("max_steps must be at least 1");
  if (!(c.depletion_threshold > 0.0)) throw ConfigError("depletion threshold must be positive");
  if (!(c.max_price > 0.0)) throw ConfigError("max_price must be positive");
  if (c.pricing == PricingMode::fixed && c.fixed_prices.size() != c.resources)
    throw ConfigError("fixed pricing needs one price per resource");
  for (double p : c.fixed_prices)
    if (!(p >= 0.0)) throw ConfigError("fixed prices must be non-negative");
  if (c.obfuscation.kind == objectives::ObfuscationKind::bins && c.obfuscation.bins < 1)
    throw ConfigError("obfuscation bin count must be at least 1");
  if (c.obfuscation.kind == objectives::ObfuscationKind::uniform_noise && !(c.obfuscation.noise_magnitude > 0.0))
    throw ConfigError("obfuscation noise magnitude must be positive");
  if (c.fairness.kind == objectives::FairnessKind::atkinson && c.fairness.epsilon != 1.0)
    throw ConfigError("only the epsilon = 1 Atkinson index is supported");
  if (c.episodes == 0 || c.trials == 0) throw ConfigError("episodes and trials must be at least 1");
  objectives::validate(c.weights);
  rl::validate(c.harvester_ppo);
  rl::validate(c.policymaker_ppo);
}

Matrix build_skills(std::size_t harvesters, std::size_t resources, double specialist, double generalist) {
  Matrix skills(harvesters, resources, generalist);
  for (std::size_t n = 0; n < harvesters; ++n) skills(n, n % resources) = specialist;
  return skills;
}

BuyerDraw sample_buyers(std::size_t buyers, std::size_t resources, Rng& rng) {
  BuyerDraw d{std::vector<double>(buyers), Matrix(buyers, resources)};
  // budgets from (0, 1] so every buyer brings positive money
  for (double& b : d.budgets) b = 1.0 - uniform01(rng);
  for (double& v : d.valuations.data()) v = uniform01(rng);
  return d;
}

void PpoController::end_episode() {
  if (auto diag = agent_.maybe_update()) updates_.push_back(*diag);
}

Agents make_learning_agents(const ScenarioConfig& config, std::uint64_t trial) {
  validate(config);
  Agents agents;
  const std::size_t r = config.resources;
  for (std::size_t n = 0; n < config.harvesters; ++n) {
    rl::ActionBounds bounds{std::vector<double>(r, 0.0), std::vector<double>(r, config.max_effort)};
    agents.harvesters.push_back(std::make_unique<PpoController>(rl::PpoAgent(
        "harvester_" + std::to_string(n), rl::harvester_observation_size(r), std::move(bounds), config.harvester_ppo,
        make_rng(config.seed, trial, n, StreamTag::agent_init), make_rng(config.seed, trial, n, StreamTag::agent_action),
        make_rng(config.seed, trial, n, StreamTag::agent_shuffle))));
  }
  if (config.pricing == PricingMode::policymaker) {
    const std::uint64_t id = config.harvesters;
    rl::ActionBounds bounds{std::vector<double>(r, 0.0), std::vector<double>(r, config.max_price)};
    agents.policymaker = std::make_unique<PpoController>(rl::PpoAgent(
        "policymaker", rl::policymaker_observation_size(config.harvesters, r, config.buyers), std::move(bounds),
        config.policymaker_ppo, make_rng(config.seed, trial, id, StreamTag::agent_init),
        make_rng(config.seed, trial, id, StreamTag::agent_action),
        make_rng(config.seed, trial, id, StreamTag::agent_shuffle)));
  }
  return agents;
}

Environment::Environment(const ScenarioConfig& config, Rng buyer_rng, Rng obfuscation_rng)
    : config_(config), buyer_rng_(std::move(buyer_rng)), obfuscation_rng_(std::move(obfuscation_rng)) {
  validate(config_);
  const double s_eq =
      fishery::equilibrium_stock(config_.scarcity, config_.harvesters, config_.growth_rate, config_.max_effort);
  resources_.assign(config_.resources, fishery::ResourceParams{s_eq, config_.growth_rate, s_eq});
  equilibrium_stocks_.assign(config_.resources, s_eq);
  const Matrix skills =
      build_skills(config_.harvesters, config_.resources, config_.specialist_skill, config_.generalist_skill);
  for (std::size_t n = 0; n < config_.harvesters; ++n) {
    const auto row = skills.row(n);
    harvester_params_.push_back({std::vector<double>(row.begin(), row.end()), config_.harvesting_cost});
  }
  reset();
}

void Environment::reset() {
  state_.stocks.clear();
  for (const auto& r : resources_) state_.stocks.push_back(r.initial_stock);
  state_.time_step = 0;
  previous_prices_.assign(config_.resources, 0.0);
  previous_efforts_ = Matrix(config_.harvesters, config_.resources);
  previous_revenues_.assign(config_.harvesters, 0.0);
  done_ = false;
}

StepRecord Environment::step(Agents& agents) {
  if (done_) throw ConfigError("step() called on a finished episode; call reset()");
  const std::size_t n_h = config_.harvesters, n_r = config_.resources, n_b = config_.buyers;
  if (agents.harvesters.size() != n_h) throw ConfigError("wrong number of harvester controllers");

  StepRecord rec;
  rec.time_step = state_.time_step;
  rec.stocks_before = state_.stocks;

  // (1) efforts from last step's observations
  rec.efforts = Matrix(n_h, n_r);
  for (std::size_t n = 0; n < n_h; ++n) {
    const auto obs = rl::build_harvester_observation(previous_prices_, previous_efforts_.row(n), previous_revenues_[n]);
    const std::vector<double> action = agents.harvesters[n]->act(obs);
    if (action.size() != n_r) throw ConfigError("harvester action has the wrong length");
    for (std::size_t r = 0; r < n_r; ++r) rec.efforts(n, r) = std::clamp(action[r], 0.0, config_.max_effort);
  }

  // (2) harvest and regrowth
  auto [next, outcome] = fishery::step(state_, rec.efforts, harvester_params_, resources_);
  rec.effective_efforts = outcome.effective_efforts;
  rec.harvests = outcome.individual_harvest;
  rec.supplies = outcome.total_harvest;
  rec.stocks_after = next.stocks;

  // (3) a fresh set of buyers
  BuyerDraw buyers = sample_buyers(n_b, n_r, buyer_rng_);
  rec.budgets = buyers.budgets;
  rec.valuations = buyers.valuations;
  const market::MarketInstance instance{buyers.budgets, buyers.valuations, rec.supplies};
  rec.market_skipped = !(sum(rec.supplies) > 0.0);

  // (4) prices and allocation
  const bool want_reference = config_.pricing != PricingMode::market_equilibrium &&
                              (config_.track_equilibrium || (config_.weights.intervention > 0.0 &&
                                                             config_.price_reference == PriceReference::equilibrium));
  std::vector<double> equilibrium_prices;
  rec.allocation = Matrix(n_b, n_r);
  switch (config_.pricing) {
    case PricingMode::market_equilibrium: {
      if (rec.market_skipped) {
        rec.prices.assign(n_r, 0.0);
      } else {
        market::MarketOutcome eq = market::solve_equilibrium(instance, config_.solver);
        rec.prices = eq.prices;
        rec.allocation = eq.allocation;
      }
      equilibrium_prices = rec.prices;
      break;
    }
    case PricingMode::policymaker: {
      if (!agents.policymaker) throw ConfigError("policymaker mode needs a policymaker controller");
      const Matrix observed = objectives::obfuscate(buyers.valuations, config_.obfuscation, obfuscation_rng_);
      const auto obs = rl::build_policymaker_observation(outcome.effective_efforts, rec.stocks_before,
                                                         buyers.budgets, observed);
      rec.prices = agents.policymaker->act(obs);
      if (rec.prices.size() != n_r) throw ConfigError("policymaker action has the wrong length");
      for (double& p : rec.prices) p = std::clamp(p, 0.0, config_.max_price);
      break;
    }
    case PricingMode::fixed:
      rec.prices = config_.fixed_prices;
      break;
  }
  if (config_.pricing != PricingMode::market_equilibrium) {
    if (!rec.market_skipped) rec.allocation = market::allocate_at_prices(instance, rec.prices).allocation;
    if (want_reference) {
      equilibrium_prices = rec.market_skipped ? std::vector<double>(n_r, 0.0)
                                              : market::solve_equilibrium(instance, config_.solver).prices;
    }
  }
  rec.buyer_utilities = market::utilities(rec.allocation, buyers.valuations);
  if (!rec.market_skipped) {
    rec.wasted_fraction = objectives::wasted_fraction(rec.allocation, rec.supplies);
    rec.leftover_budget = objectives::leftover_budget_fraction(rec.allocation, rec.prices, rec.budgets);
  }
  if (!equilibrium_prices.empty()) rec.reference_prices = equilibrium_prices;

  // (5) harvesters are paid on what they harvested
  rec.harvester_revenues = fishery::revenue(rec.prices, outcome, harvester_params_);

  // (6) policymaker reward; sustainability is judged on the post-step stock
  std::optional<std::span<const double>> reference;
  if (config_.price_reference == PriceReference::previous_price && config_.pricing != PricingMode::market_equilibrium)
    reference = std::span<const double>(previous_prices_);
  else if (!rec.reference_prices.empty())
    reference = std::span<const double>(rec.reference_prices);
  rec.reward = objectives::policymaker_reward({rec.harvester_revenues, rec.buyer_utilities, rec.stocks_after,
                                               equilibrium_stocks_, rec.prices, reference},
                                              config_.weights, config_.fairness);

  // (7) termination
  rec.depleted = fishery::is_depleted(next, config_.depletion_threshold);
  rec.terminal = rec.depleted || next.time_step >= config_.max_steps;

  for (std::size_t n = 0; n < n_h; ++n) agents.harvesters[n]->observe(rec.harvester_revenues[n], rec.terminal);
  if (config_.pricing == PricingMode::policymaker) agents.policymaker->observe(rec.reward.total, rec.terminal);

  previous_prices_ = rec.prices;
  previous_efforts_ = rec.efforts;
  previous_revenues_ = rec.harvester_revenues;
  state_ = std::move(next);
  done_ = rec.terminal;
  return rec;
}

void MetricAccumulator::push(Metric m, double v) {
  if (std::isnan(v)) return;
  sums_[static_cast<std::size_t>(m)] += v;
  ++counts_[static_cast<std::size_t>(m)];
}

void MetricAccumulator::add(const StepRecord& s, std::span<const double> equilibrium_stocks) {
  const double hw = sum(s.harvester_revenues);
  push(Metric::harvester_welfare, hw);
  push(Metric::harvester_return, hw);
  push(Metric::buyer_welfare, sum(s.buyer_utilities));
  push(Metric::stock_difference, s.reward.sustainability);
  double worst_pct = 0.0;
  for (std::size_t r = 0; r < s.stocks_after.size(); ++r)
    worst_pct = std::min(worst_pct, 100.0 * std::min(s.stocks_after[r] - equilibrium_stocks[r], 0.0) /
                                        equilibrium_stocks[r]);
  push(Metric::stock_difference_pct, worst_pct);

  using objectives::atkinson, objectives::gini, objectives::jain;
  const auto index = [&](Metric m, std::span<const double> v, double (*f)(std::span<const double>)) {
    if (auto x = index_or_none(v, f)) push(m, *x);
  };
  index(Metric::harvester_jain, s.harvester_revenues, jain);
  index(Metric::harvester_gini, s.harvester_revenues, gini);
  index(Metric::harvester_atkinson, s.harvester_revenues, atkinson);
  if (!s.market_skipped) {
    index(Metric::buyer_jain, s.buyer_utilities, jain);
    index(Metric::buyer_gini, s.buyer_utilities, gini);
    index(Metric::buyer_atkinson, s.buyer_utilities, atkinson);
  }
  if (s.wasted_fraction) push(Metric::wasted_fraction, *s.wasted_fraction);
  if (s.leftover_budget) push(Metric::leftover_budget, *s.leftover_budget);
  if (!s.reference_prices.empty()) {
    double gap = 0.0;
    for (std::size_t r = 0; r < s.prices.size(); ++r) gap += std::abs(s.prices[r] - s.reference_prices[r]);
    push(Metric::price_gap, gap);
  }
  push(Metric::mean_price, sum(s.prices) / static_cast<double>(s.prices.size()));
  push(Metric::policymaker_reward, s.reward.total);
}

EpisodeMetrics MetricAccumulator::finish(std::size_t length, bool depleted) const {
  EpisodeMetrics m;
  for (std::size_t i = 0; i < kMetricCount; ++i) m.values[i] = counts_[i] ? sums_[i] / static_cast<double>(counts_[i]) : kNaN;
  m[Metric::harvester_return] = sums_[static_cast<std::size_t>(Metric::harvester_return)];
  m[Metric::length] = static_cast<double>(length);
  m[Metric::depleted] = depleted ? 1.0 : 0.0;
  return m;
}

EpisodeLog run_episode(Environment& env, Agents& agents, bool record_steps) {
  env.reset();
  EpisodeLog log;
  MetricAccumulator acc;
  while (!env.done()) {
    StepRecord rec = env.step(agents);
    acc.add(rec, env.equilibrium_stocks());
    ++log.length;
    log.depleted = rec.depleted;
    if (record_steps) log.steps.push_back(std::move(rec));
  }
  log.metrics = acc.finish(log.length, log.depleted);
  return log;
}

EpisodeMetrics summarize(std::span<const EpisodeMetrics> episodes, std::size_t window) {
  const std::size_t start = episodes.size() > window ? episodes.size() - window : 0;
  std::array<double, kMetricCount> sums{};
  std::array<std::size_t, kMetricCount> counts{};
  for (std::size_t e = start; e < episodes.size(); ++e)
    for (std::size_t i = 0; i < kMetricCount; ++i)
      if (!std::isnan(episodes[e].values[i])) {
        sums[i] += episodes[e].values[i];
        ++counts[i];
      }
  EpisodeMetrics out;
  for (std::size_t i = 0; i < kMetricCount; ++i) out.values[i] = counts[i] ? sums[i] / static_cast<double>(counts[i]) : kNaN;
  return out;
}

TrialResult run_trial(const ScenarioConfig& config, std::size_t trial, const EpisodeObserver& observer) {
  validate(config);
  Agents agents = make_learning_agents(config, trial);
  Environment env(config, make_rng(config.seed, trial, kEnvironmentAgent, StreamTag::buyers),
                  make_rng(config.seed, trial, kEnvironmentAgent, StreamTag::obfuscation));
  TrialResult result;
  result.trial = trial;
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const bool record = config.step_log_every > 0 && e % config.step_log_every == 0;
    EpisodeLog log = run_episode(env, agents, record);
    for (auto& h : agents.harvesters) h->end_episode();
    if (agents.policymaker) agents.policymaker->end_episode();
    if (observer) observer(trial, e, log);
    result.episodes.push_back(log.metrics);
  }
  result.summary = summarize(result.episodes, config.summary_window);
  result.depletion_frequency = result.summary[Metric::depleted];
  const std::size_t start = result.episodes.size() > config.summary_window ? result.episodes.size() - config.summary_window : 0;
  result.min_length = std::numeric_limits<double>::infinity();
  for (std::size_t e = start; e < result.episodes.size(); ++e)
    result.min_length = std::min(result.min_length, result.episodes[e][Metric::length]);
  return result;
}

std::vector<TrialResult> run_experiment(const ScenarioConfig& config, const EpisodeObserver& observer,
                                        unsigned threads) {
  validate(config);
  std::vector<TrialResult> results(config.trials);
  if (threads <= 1) {
    for (std::size_t t = 0; t < config.trials; ++t) results[t] = run_trial(config, t, observer);
    return results;
  }
  for (std::size_t begin = 0; begin < config.trials; begin += threads) {
    std::vector<std::future<TrialResult>> jobs;
    for (std::size_t t = begin; t < std::min<std::size_t>(config.trials, begin + threads); ++t)
      jobs.push_back(std::async(std::launch::async, [&config, &observer, t] { return run_trial(config, t, observer); }));
    for (std::size_t i = 0; i < jobs.size(); ++i) results[begin + i] = jobs[i].get();
  }
  return results;
}

double relative_difference(double treatment, double baseline) { return 100.0 * (treatment - baseline) / baseline; }

}  // namespace fm::sim
