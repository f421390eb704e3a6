#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fm/fishery.hpp"
#include "fm/market.hpp"
#include "fm/matrix.hpp"
#include "fm/objectives.hpp"
#include "fm/rl.hpp"
#include "fm/rng.hpp"

// The coupled fishery + market episode loop and multi-trial training runs.
namespace fm::sim {

enum class PricingMode {
  market_equilibrium,  // prices and allocation from the Fisher market equilibrium
  policymaker,         // a learning agent sets prices, buyers get the welfare-maximizing allocation
  fixed,               // constant prices (diagnostic environments)
};

/// Reference prices for the intervention term.
enum class PriceReference { equilibrium, previous_price };

struct ScenarioConfig {
  std::size_t harvesters = 8;
  std::size_t resources = 4;
  std::size_t buyers = 8;
  double scarcity = 0.8;  // M_s; 0.8 plentiful, 0.45 scarce
  double growth_rate = 1.0;
  double max_effort = 1.0;
  std::size_t max_steps = 500;
  double depletion_threshold = 1e-4;
  double specialist_skill = 1.0;
  double generalist_skill = 0.5;
  double harvesting_cost = 0.0;

  PricingMode pricing = PricingMode::market_equilibrium;
  std::vector<double> fixed_prices;  // used by PricingMode::fixed
  objectives::ObjectiveWeights weights{1.0, 1.0, 1.0, 1.0, 0.0};
  objectives::ObfuscationSpec obfuscation;
  objectives::FairnessIndex fairness;
  double max_price = 10.0;
  PriceReference price_reference = PriceReference::equilibrium;
  bool track_equilibrium = true;  // also solve the equilibrium in policymaker mode

  std::size_t episodes = 2400;
  std::size_t trials = 8;
  std::size_t summary_window = 400;
  std::uint64_t seed = 0;
  std::size_t step_log_every = 0;  // record step records every k-th episode; 0 disables

  rl::PpoConfig harvester_ppo;
  rl::PpoConfig policymaker_ppo;
  market::SolverOptions solver;
};

void validate(const ScenarioConfig& config);

/// eta_{n,r} = specialist if n = r (mod R), generalist otherwise.
Matrix build_skills(std::size_t harvesters, std::size_t resources, double specialist = 1.0,
                    double generalist = 0.5);

struct BuyerDraw {
  std::vector<double> budgets;  // in (0, 1]
  Matrix valuations;            // in [0, 1)
};

/// Fresh i.i.d. uniform budgets and valuations.
BuyerDraw sample_buyers(std::size_t buyers, std::size_t resources, Rng& rng);

/// Something that picks actions: a learning agent, a frozen policy, a constant.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::vector<double> act(std::span<const double> observation) = 0;
  virtual void observe(double /*reward*/, bool /*done*/) {}
  /// Called after every episode; learning controllers train here.
  virtual void end_episode() {}
};

class ConstantController final : public Controller {
 public:
  explicit ConstantController(std::vector<double> action) : action_(std::move(action)) {}
  std::vector<double> act(std::span<const double>) override { return action_; }

 private:
  std::vector<double> action_;
};

class PpoController final : public Controller {
 public:
  explicit PpoController(rl::PpoAgent agent) : agent_(std::move(agent)) {}
  std::vector<double> act(std::span<const double> observation) override { return agent_.act(observation); }
  void observe(double reward, bool done) override { agent_.observe(reward, done); }
  void end_episode() override;

  rl::PpoAgent& agent() { return agent_; }
  const rl::PpoAgent& agent() const { return agent_; }
  const std::vector<rl::UpdateDiagnostics>& updates() const { return updates_; }

 private:
  rl::PpoAgent agent_;
  std::vector<rl::UpdateDiagnostics> updates_;
};

/// Acts with the mean of a policy, clipped to its bounds.
class DeterministicController final : public Controller {
 public:
  explicit DeterministicController(const rl::PpoAgent& agent) : agent_(&agent) {}
  std::vector<double> act(std::span<const double> observation) override {
    return agent_->act_deterministic(observation);
  }

 private:
  const rl::PpoAgent* agent_;
};

struct Agents {
  std::vector<std::unique_ptr<Controller>> harvesters;
  std::unique_ptr<Controller> policymaker;  // required in policymaker mode only
};

/// PPO harvesters (and a PPO policymaker in policymaker mode) seeded from
/// (config.seed, trial).
Agents make_learning_agents(const ScenarioConfig& config, std::uint64_t trial);

struct StepRecord {
  std::size_t time_step = 0;
  Matrix efforts;       // N x R, as applied
  Matrix effective_efforts;
  Matrix harvests;      // N x R
  std::vector<double> supplies;       // total harvest per resource
  std::vector<double> stocks_before;
  std::vector<double> stocks_after;
  std::vector<double> budgets;
  Matrix valuations;
  std::vector<double> prices;
  std::vector<double> reference_prices;  // empty when not computed
  Matrix allocation;    // B x R
  std::vector<double> harvester_revenues;
  std::vector<double> buyer_utilities;
  std::optional<double> wasted_fraction;
  std::optional<double> leftover_budget;
  objectives::RewardBreakdown reward;
  bool market_skipped = false;
  bool depleted = false;
  bool terminal = false;
};

/// Stateful environment for one trial; reset() starts a new episode.
class Environment {
 public:
  Environment(const ScenarioConfig& config, Rng buyer_rng, Rng obfuscation_rng);

  void reset();
  bool done() const { return done_; }
  const fishery::ResourceState& state() const { return state_; }
  std::span<const double> equilibrium_stocks() const { return equilibrium_stocks_; }
  const std::vector<fishery::HarvesterParams>& harvester_params() const { return harvester_params_; }
  const ScenarioConfig& config() const { return config_; }

  /// One time step: efforts, harvest and regrowth, buyers, pricing,
  /// allocation, rewards. Delivers rewards to the controllers.
  /// Throws SolverError if a market solve fails.
  StepRecord step(Agents& agents);

 private:
  ScenarioConfig config_;
  Rng buyer_rng_;
  Rng obfuscation_rng_;
  std::vector<fishery::ResourceParams> resources_;
  std::vector<double> equilibrium_stocks_;
  std::vector<fishery::HarvesterParams> harvester_params_;
  fishery::ResourceState state_;
  std::vector<double> previous_prices_;
  Matrix previous_efforts_;
  std::vector<double> previous_revenues_;
  bool done_ = false;
};

enum class Metric : std::size_t {
  length,
  depleted,
  harvester_welfare,   // per-step mean of sum_n u_n
  buyer_welfare,       // per-step mean of sum_b u_b
  harvester_return,    // episode total of sum_n u_n
  stock_difference,    // per-step mean of the sustainability term
  stock_difference_pct,
  harvester_jain,
  harvester_gini,
  harvester_atkinson,
  buyer_jain,
  buyer_gini,
  buyer_atkinson,
  wasted_fraction,
  leftover_budget,
  price_gap,           // per-step mean of sum_r |p_r - p^ME_r|
  mean_price,
  policymaker_reward,  // per-step mean
  count
};

inline constexpr std::size_t kMetricCount = static_cast<std::size_t>(Metric::count);

inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "length",          "depleted",         "harvester_welfare", "buyer_welfare",      "harvester_return",
    "stock_difference", "stock_difference_pct", "harvester_jain", "harvester_gini",   "harvester_atkinson",
    "buyer_jain",      "buyer_gini",       "buyer_atkinson",    "wasted_fraction",    "leftover_budget",
    "price_gap",       "mean_price",       "policymaker_reward"};

/// Episode-level metrics; NaN marks "undefined for this episode".
struct EpisodeMetrics {
  std::array<double, kMetricCount> values{};
  double& operator[](Metric m) { return values[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
};

struct EpisodeLog {
  std::vector<StepRecord> steps;  // empty unless recording was requested
  EpisodeMetrics metrics;
  std::size_t length = 0;
  bool depleted = false;
};

/// Runs one episode from s_0 = S_eq until T_max or depletion. Controllers'
/// end_episode() is not called here.
EpisodeLog run_episode(Environment& env, Agents& agents, bool record_steps = false);

/// Aggregates a step stream into episode metrics.
class MetricAccumulator {
 public:
  void add(const StepRecord& step, std::span<const double> equilibrium_stocks);
  EpisodeMetrics finish(std::size_t length, bool depleted) const;

 private:
  std::array<double, kMetricCount> sums_{};
  std::array<std::size_t, kMetricCount> counts_{};
  void push(Metric m, double v);
};

/// NaN-skipping mean of each metric over the last `window` episodes.
EpisodeMetrics summarize(std::span<const EpisodeMetrics> episodes, std::size_t window);

struct TrialResult {
  std::size_t trial = 0;
  std::vector<EpisodeMetrics> episodes;
  EpisodeMetrics summary;        // window means
  double depletion_frequency = 0.0;  // over the window
  double min_length = 0.0;           // over the window
};

using EpisodeObserver = std::function<void(std::size_t trial, std::size_t episode, const EpisodeLog&)>;

/// Agent index reserved for the environment's own streams (buyers, obfuscation).
inline constexpr std::uint64_t kEnvironmentAgent = 1'000'000;

/// Trains fresh agents for config.episodes episodes.
TrialResult run_trial(const ScenarioConfig& config, std::size_t trial, const EpisodeObserver& observer = {});

/// Runs config.trials independent trials; trial i uses streams derived from
/// (config.seed, i). `threads` > 1 runs trials concurrently.
std::vector<TrialResult> run_experiment(const ScenarioConfig& config, const EpisodeObserver& observer = {},
                                        unsigned threads = 1);

/// 100 (x - y) / y.
double relative_difference(double treatment, double baseline);

}  // namespace fm::sim
