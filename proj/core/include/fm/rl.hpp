#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fm/matrix.hpp"
#include "fm/nn.hpp"
#include "fm/rng.hpp"

// Independent-learner PPO with diagonal Gaussian policies over box actions.
namespace fm::rl {

struct PpoConfig {
  double learning_rate = 1e-4;
  double clip_param = 0.3;
  double vf_clip_param = 10.0;
  double kl_target = 0.01;
  double gamma = 0.99;
  double gae_lambda = 1.0;
  double vf_loss_coeff = 1.0;
  double entropy_coeff = 0.0;
  std::size_t train_batch_size = 4000;
  std::size_t minibatch_size = 128;
  std::size_t sgd_iterations = 30;
  double initial_kl_coeff = 0.2;
  double initial_log_std = 0.0;
  std::size_t hidden_units = 64;
};

void validate(const PpoConfig& config);

struct ActionBounds {
  std::vector<double> low;
  std::vector<double> high;
};

/// Mean network, state-value network and a free log-std vector.
struct GaussianPolicy {
  GaussianPolicy() = default;
  GaussianPolicy(std::size_t observations, std::size_t actions, std::size_t hidden, double initial_log_std);

  void init(Rng& rng);

  std::size_t observation_size() const { return mean_net.input_size(); }
  std::size_t action_size() const { return log_std.size(); }

  /// Flat layout: mean_net parameters, then log_std, then value_net parameters.
  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;

  nn::Mlp mean_net;
  nn::Mlp value_net;
  std::vector<double> log_std;
};

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std);

struct ActionSample {
  std::vector<double> env_action;  // raw action clipped to the bounds
  std::vector<double> raw_action;
  std::vector<double> mean;
  double log_prob = 0.0;  // of the raw action
  double value = 0.0;
};

/// Samples raw ~ N(mean_net(obs), exp(log_std)) and clips it to the bounds.
/// Throws TrainingDivergence on non-finite network output.
ActionSample act(const GaussianPolicy& policy, std::span<const double> observation, Rng& rng,
                 const ActionBounds& bounds);

struct Transition {
  std::vector<double> observation;
  std::vector<double> raw_action;
  std::vector<double> mean;     // behaviour distribution at sampling time
  std::vector<double> log_std;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // V of the state after the last step; 0 on a true end
};

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // value targets: advantage + value
};

/// Generalized advantage estimation over one trajectory segment.
AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda);

struct TrainingSample {
  std::vector<double> observation;
  std::vector<double> raw_action;
  std::vector<double> old_mean;
  std::vector<double> old_log_std;
  double old_log_prob = 0.0;
  double old_value = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

/// Flattens trajectories into samples with GAE advantages, optionally
/// normalized to zero mean and unit standard deviation over the batch.
std::vector<TrainingSample> build_samples(std::span<const Trajectory> trajectories, const PpoConfig& config,
                                          bool normalize_advantages = true);

struct LossTerms {
  double total = 0.0;
  double surrogate = 0.0;   // mean clipped surrogate (to be maximized)
  double kl = 0.0;          // mean KL(old || new)
  double value_loss = 0.0;  // mean clipped squared error
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double max_ratio_deviation = 0.0;  // max |ratio - 1|
};

/// PPO minibatch loss; when `grad` is non-empty it receives d(total)/d(params)
/// in the flat layout of GaussianPolicy.
LossTerms ppo_loss(const GaussianPolicy& policy, std::span<const TrainingSample> batch, double kl_coeff,
                   const PpoConfig& config, std::span<double> grad = {});

/// Clipped surrogate of a single sample: min(A r, A clip(r, 1-c, 1+c)).
double clipped_surrogate(double ratio, double advantage, double clip_param);

struct UpdateDiagnostics {
  double mean_kl = 0.0;        // over the final epoch
  double clip_fraction = 0.0;  // over all minibatches
  double value_loss = 0.0;     // over the final epoch
  double policy_loss = 0.0;
  double kl_coeff = 0.0;       // after adaptation
  double first_clip_fraction = 0.0;   // first minibatch of the first epoch
  double first_max_ratio_deviation = 0.0;
  std::size_t samples = 0;
  std::size_t minibatches = 0;
};

/// Optimizer-side state that lives alongside a policy.
struct LearnerState {
  nn::AdamState adam;
  double kl_coeff = 0.2;
};

/// One PPO training round: sgd_iterations epochs of shuffled minibatches,
/// then the adaptive KL coefficient update. Throws TrainingDivergence with
/// the offending minibatch index on a non-finite loss.
UpdateDiagnostics ppo_update(GaussianPolicy& policy, LearnerState& learner, std::span<const Trajectory> trajectories,
                             const PpoConfig& config, Rng& shuffle_rng);

/// A learning agent: policy, optimizer and the rollout buffer it trains on.
class PpoAgent {
 public:
  PpoAgent(std::string id, std::size_t observation_size, ActionBounds bounds, const PpoConfig& config,
           Rng init_rng, Rng action_rng, Rng shuffle_rng);

  const std::string& id() const { return id_; }
  const GaussianPolicy& policy() const { return policy_; }
  GaussianPolicy& policy() { return policy_; }
  const ActionBounds& bounds() const { return bounds_; }
  const PpoConfig& config() const { return config_; }

  /// Samples an action and opens a pending transition.
  std::vector<double> act(std::span<const double> observation);
  /// Mean action clipped to the bounds; no state change.
  std::vector<double> act_deterministic(std::span<const double> observation) const;
  /// Closes the pending transition.
  void observe(double reward, bool done);

  std::size_t buffered_steps() const;
  /// Trains when at least train_batch_size steps of finished episodes are
  /// buffered. Call at episode boundaries.
  std::optional<UpdateDiagnostics> maybe_update();

  void set_learning(bool enabled) { learning_ = enabled; }
  bool learning() const { return learning_; }

 private:
  std::string id_;
  ActionBounds bounds_;
  PpoConfig config_;
  GaussianPolicy policy_;
  LearnerState learner_;
  Rng action_rng_;
  Rng shuffle_rng_;
  std::vector<Trajectory> finished_;
  Trajectory current_;
  std::optional<Transition> pending_;
  bool learning_ = true;
};

std::size_t harvester_observation_size(std::size_t resources);
std::size_t policymaker_observation_size(std::size_t harvesters, std::size_t resources, std::size_t buyers);

/// (p_{t-1}, phi_{n,t-1}, u_{n,t-1}); pass zeros at t = 0.
std::vector<double> build_harvester_observation(std::span<const double> previous_prices,
                                                std::span<const double> previous_efforts, double previous_reward);

/// (effective efforts row-major by harvester, stocks, budgets, obfuscated
/// valuations row-major by buyer).
std::vector<double> build_policymaker_observation(const Matrix& effective_efforts, std::span<const double> stocks,
                                                  std::span<const double> budgets,
                                                  const Matrix& observed_valuations);

struct CheckpointAgent {
  std::string id;
  const GaussianPolicy* policy = nullptr;
};

/// Writes <dir>/<id>.mean.bin, <id>.value.bin, <id>.logstd.bin per agent and
/// a manifest.json listing ids, observation/action sizes and the config hash.
void save_checkpoint(const std::filesystem::path& dir, std::span<const CheckpointAgent> agents,
                     const std::string& config_hash);

GaussianPolicy load_policy(const std::filesystem::path& dir, const std::string& id);

}  // namespace fm::rl
