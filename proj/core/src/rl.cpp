#include "fm/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "fm/error.hpp"

namespace fm::rl {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void validate(const PpoConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (!(c.clip_param > 0.0)) throw ConfigError("clip_param must be positive");
  if (!(c.vf_clip_param > 0.0)) throw ConfigError("vf_clip_param must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(c.kl_target > 0.0)) throw ConfigError("kl_target must be positive");
  if (c.train_batch_size == 0 || c.minibatch_size == 0 || c.sgd_iterations == 0 || c.hidden_units == 0)
    throw ConfigError("batch sizes, sgd_iterations and hidden_units must be positive");
  if (c.minibatch_size > c.train_batch_size) throw ConfigError("minibatch_size exceeds train_batch_size");
}

GaussianPolicy::GaussianPolicy(std::size_t observations, std::size_t actions, std::size_t hidden,
                               double initial_log_std)
    : mean_net(observations, actions, hidden), value_net(observations, 1, hidden), log_std(actions, initial_log_std) {}

void GaussianPolicy::init(Rng& rng) {
  mean_net.init_uniform(rng);
  value_net.init_uniform(rng);
}

std::size_t GaussianPolicy::parameter_count() const {
  return mean_net.parameter_count() + log_std.size() + value_net.parameter_count();
}

std::vector<double> GaussianPolicy::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), mean_net.parameters().begin(), mean_net.parameters().end());
  flat.insert(flat.end(), log_std.begin(), log_std.end());
  flat.insert(flat.end(), value_net.parameters().begin(), value_net.parameters().end());
  return flat;
}

void GaussianPolicy::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ConfigError("flat parameter vector has the wrong length");
  auto it = flat.begin();
  std::copy_n(it, mean_net.parameter_count(), mean_net.parameters().begin());
  it += static_cast<std::ptrdiff_t>(mean_net.parameter_count());
  std::copy_n(it, log_std.size(), log_std.begin());
  it += static_cast<std::ptrdiff_t>(log_std.size());
  std::copy_n(it, value_net.parameter_count(), value_net.parameters().begin());
}

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t k = 0; k < action.size(); ++k) {
    const double z = (action[k] - mean[k]) * std::exp(-log_std[k]);
    lp += -0.5 * z * z - log_std[k] - 0.5 * kLogTwoPi;
  }
  return lp;
}

ActionSample act(const GaussianPolicy& policy, std::span<const double> observation, Rng& rng,
                 const ActionBounds& bounds) {
  const std::size_t k = policy.action_size();
  if (bounds.low.size() != k || bounds.high.size() != k) throw ConfigError("action bounds do not match policy");
  ActionSample s;
  s.mean = policy.mean_net.forward(observation);
  s.value = policy.value_net.forward(observation)[0];
  if (!all_finite(s.mean) || !std::isfinite(s.value)) throw TrainingDivergence("policy produced a non-finite output");
  s.raw_action.resize(k);
  s.env_action.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    s.raw_action[i] = s.mean[i] + std::exp(policy.log_std[i]) * standard_normal(rng);
    s.env_action[i] = std::clamp(s.raw_action[i], bounds.low[i], bounds.high[i]);
  }
  s.log_prob = gaussian_log_prob(s.raw_action, s.mean, policy.log_std);
  return s;
}

AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda) {
  if (rewards.size() != values.size()) throw ConfigError("rewards and values differ in length");
  const std::size_t n = rewards.size();
  AdvantageEstimate est{std::vector<double>(n), std::vector<double>(n)};
  double next_value = bootstrap_value;
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double delta = rewards[t] + gamma * next_value - values[t];
    running = delta + gamma * lambda * running;
    est.advantages[t] = running;
    est.returns[t] = running + values[t];
    next_value = values[t];
  }
  return est;
}

std::vector<TrainingSample> build_samples(std::span<const Trajectory> trajectories, const PpoConfig& config,
                                          bool normalize_advantages) {
  std::vector<TrainingSample> samples;
  for (const Trajectory& traj : trajectories) {
    std::vector<double> rewards, values;
    for (const Transition& tr : traj.steps) {
      rewards.push_back(tr.reward);
      values.push_back(tr.value);
    }
    const AdvantageEstimate est = gae(rewards, values, traj.bootstrap_value, config.gamma, config.gae_lambda);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      samples.push_back(TrainingSample{tr.observation, tr.raw_action, tr.mean, tr.log_std, tr.log_prob, tr.value,
                                       est.advantages[t], est.returns[t]});
    }
  }
  if (normalize_advantages && !samples.empty()) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(samples.size()));
    for (auto& s : samples) s.advantage = (s.advantage - mean) / std::max(sd, 1e-8);
  }
  return samples;
}

double clipped_surrogate(double ratio, double advantage, double clip_param) {
  const double clipped = std::clamp(ratio, 1.0 - clip_param, 1.0 + clip_param);
  return std::min(advantage * ratio, advantage * clipped);
}

LossTerms ppo_loss(const GaussianPolicy& policy, std::span<const TrainingSample> batch, double kl_coeff,
                   const PpoConfig& config, std::span<double> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != policy.parameter_count()) throw ConfigError("gradient buffer has the wrong length");
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t k = policy.action_size();
  const std::size_t mean_count = policy.mean_net.parameter_count();
  std::span<double> g_mean = want_grad ? grad.subspan(0, mean_count) : std::span<double>{};
  std::span<double> g_log_std = want_grad ? grad.subspan(mean_count, k) : std::span<double>{};
  std::span<double> g_value = want_grad ? grad.subspan(mean_count + k) : std::span<double>{};

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> std_new(k);
  for (std::size_t i = 0; i < k; ++i) std_new[i] = std::exp(policy.log_std[i]);

  LossTerms terms;
  nn::Mlp::Tape mean_tape, value_tape;
  std::vector<double> d_mean(k), d_value(1);
  std::size_t clipped = 0;

  for (const TrainingSample& s : batch) {
    const std::vector<double> mean = policy.mean_net.forward(s.observation, mean_tape);
    const double value = policy.value_net.forward(s.observation, value_tape)[0];

    const double log_prob = gaussian_log_prob(s.raw_action, mean, policy.log_std);
    const double ratio = std::exp(log_prob - s.old_log_prob);
    const double surrogate = clipped_surrogate(ratio, s.advantage, config.clip_param);
    // gradient flows only through the unclipped branch when it is the minimum
    const bool unclipped_active = s.advantage * ratio <= surrogate;
    if (std::abs(ratio - 1.0) > config.clip_param) ++clipped;
    terms.max_ratio_deviation = std::max(terms.max_ratio_deviation, std::abs(ratio - 1.0));

    double kl = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double old_var = std::exp(2.0 * s.old_log_std[i]);
      const double diff = s.old_mean[i] - mean[i];
      kl += policy.log_std[i] - s.old_log_std[i] + (old_var + diff * diff) / (2.0 * std_new[i] * std_new[i]) - 0.5;
    }

    const double err = value - s.value_target;
    const double sq = err * err;
    const double value_loss = std::min(sq, config.vf_clip_param);

    double entropy = 0.0;
    for (std::size_t i = 0; i < k; ++i) entropy += policy.log_std[i] + 0.5 * (1.0 + kLogTwoPi);

    terms.surrogate += surrogate * inv_n;
    terms.kl += kl * inv_n;
    terms.value_loss += value_loss * inv_n;
    terms.entropy += entropy * inv_n;

    if (!want_grad) continue;

    const double d_logp = unclipped_active ? -s.advantage * ratio * inv_n : 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double var = std_new[i] * std_new[i];
      const double dev = s.raw_action[i] - mean[i];
      const double old_var = std::exp(2.0 * s.old_log_std[i]);
      const double diff = s.old_mean[i] - mean[i];
      d_mean[i] = d_logp * dev / var + kl_coeff * inv_n * (-diff) / var;
      g_log_std[i] += d_logp * (dev * dev / var - 1.0) + kl_coeff * inv_n * (1.0 - (old_var + diff * diff) / var) -
                      config.entropy_coeff * inv_n;
    }
    policy.mean_net.backward(mean_tape, d_mean, g_mean);
    d_value[0] = sq < config.vf_clip_param ? config.vf_loss_coeff * 2.0 * err * inv_n : 0.0;
    policy.value_net.backward(value_tape, d_value, g_value);
  }

  terms.clip_fraction = static_cast<double>(clipped) * inv_n;
  terms.total = -terms.surrogate + kl_coeff * terms.kl + config.vf_loss_coeff * terms.value_loss -
                config.entropy_coeff * terms.entropy;
  return terms;
}

UpdateDiagnostics ppo_update(GaussianPolicy& policy, LearnerState& learner, std::span<const Trajectory> trajectories,
                             const PpoConfig& config, Rng& shuffle_rng) {
  validate(config);
  const std::vector<TrainingSample> samples = build_samples(trajectories, config);
  if (samples.size() < config.minibatch_size)
    throw ConfigError("batch of " + std::to_string(samples.size()) + " samples is smaller than one minibatch");
  if (learner.adam.first_moment.size() != policy.parameter_count())
    learner.adam = nn::make_adam_state(policy.parameter_count());

  const nn::AdamConfig adam_config{config.learning_rate};
  const std::size_t batches_per_epoch = samples.size() / config.minibatch_size;
  std::vector<std::size_t> order(samples.size());
  std::vector<TrainingSample> minibatch(config.minibatch_size);
  std::vector<double> grad(policy.parameter_count());
  std::vector<double> params;

  UpdateDiagnostics diag;
  diag.samples = samples.size();
  double clip_total = 0.0;
  for (std::size_t epoch = 0; epoch < config.sgd_iterations; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_kl = 0.0, epoch_vf = 0.0, epoch_pi = 0.0;
    for (std::size_t mb = 0; mb < batches_per_epoch; ++mb) {
      for (std::size_t i = 0; i < config.minibatch_size; ++i) minibatch[i] = samples[order[mb * config.minibatch_size + i]];
      const LossTerms terms = ppo_loss(policy, minibatch, learner.kl_coeff, config, grad);
      if (!std::isfinite(terms.total) || !all_finite(grad))
        throw TrainingDivergence("non-finite PPO loss in epoch " + std::to_string(epoch) + ", minibatch " +
                                 std::to_string(mb));
      if (epoch == 0 && mb == 0) {
        diag.first_clip_fraction = terms.clip_fraction;
        diag.first_max_ratio_deviation = terms.max_ratio_deviation;
      }
      params = policy.flat_parameters();
      nn::adam_step(params, grad, learner.adam, adam_config);
      policy.set_flat_parameters(params);

      clip_total += terms.clip_fraction;
      epoch_kl += terms.kl;
      epoch_vf += terms.value_loss;
      epoch_pi += -terms.surrogate;
      ++diag.minibatches;
    }
    const double denom = static_cast<double>(batches_per_epoch);
    diag.mean_kl = epoch_kl / denom;
    diag.value_loss = epoch_vf / denom;
    diag.policy_loss = epoch_pi / denom;
  }
  diag.clip_fraction = clip_total / static_cast<double>(diag.minibatches);

  if (diag.mean_kl > 2.0 * config.kl_target)
    learner.kl_coeff *= 1.5;
  else if (diag.mean_kl < 0.5 * config.kl_target)
    learner.kl_coeff *= 0.5;
  diag.kl_coeff = learner.kl_coeff;
  return diag;
}

PpoAgent::PpoAgent(std::string id, std::size_t observation_size, ActionBounds bounds, const PpoConfig& config,
                   Rng init_rng, Rng action_rng, Rng shuffle_rng)
    : id_(std::move(id)),
      bounds_(std::move(bounds)),
      config_(config),
      policy_(observation_size, bounds_.low.size(), config.hidden_units, config.initial_log_std),
      action_rng_(std::move(action_rng)),
      shuffle_rng_(std::move(shuffle_rng)) {
  validate(config_);
  if (bounds_.low.size() != bounds_.high.size() || bounds_.low.empty())
    throw ConfigError("action bounds must be non-empty and matched");
  for (std::size_t i = 0; i < bounds_.low.size(); ++i)
    if (!(bounds_.low[i] <= bounds_.high[i])) throw ConfigError("action lower bound exceeds upper bound");
  policy_.init(init_rng);
  learner_.adam = nn::make_adam_state(policy_.parameter_count());
  learner_.kl_coeff = config_.initial_kl_coeff;
}

std::vector<double> PpoAgent::act(std::span<const double> observation) {
  if (pending_) throw ConfigError("agent " + id_ + " acted twice without observing a reward");
  ActionSample s = rl::act(policy_, observation, action_rng_, bounds_);
  if (learning_) {
    pending_ = Transition{std::vector<double>(observation.begin(), observation.end()), std::move(s.raw_action),
                          std::move(s.mean), policy_.log_std, s.log_prob, 0.0, s.value, false};
  }
  return s.env_action;
}

std::vector<double> PpoAgent::act_deterministic(std::span<const double> observation) const {
  std::vector<double> mean = policy_.mean_net.forward(observation);
  if (!all_finite(mean)) throw TrainingDivergence("policy produced a non-finite output");
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = std::clamp(mean[i], bounds_.low[i], bounds_.high[i]);
  return mean;
}

void PpoAgent::observe(double reward, bool done) {
  if (!learning_) return;
  if (!pending_) throw ConfigError("agent " + id_ + " received a reward without a pending action");
  pending_->reward = reward;
  pending_->done = done;
  current_.steps.push_back(std::move(*pending_));
  pending_.reset();
  if (done) {
    current_.bootstrap_value = 0.0;
    finished_.push_back(std::move(current_));
    current_ = Trajectory{};
  }
}

std::size_t PpoAgent::buffered_steps() const {
  std::size_t n = 0;
  for (const auto& t : finished_) n += t.steps.size();
  return n;
}

std::optional<UpdateDiagnostics> PpoAgent::maybe_update() {
  if (!learning_ || buffered_steps() < config_.train_batch_size) return std::nullopt;
  UpdateDiagnostics diag = ppo_update(policy_, learner_, finished_, config_, shuffle_rng_);
  finished_.clear();
  return diag;
}

std::size_t harvester_observation_size(std::size_t resources) { return 2 * resources + 1; }

std::size_t policymaker_observation_size(std::size_t harvesters, std::size_t resources, std::size_t buyers) {
  return harvesters * resources + resources + buyers + buyers * resources;
}

std::vector<double> build_harvester_observation(std::span<const double> previous_prices,
                                                std::span<const double> previous_efforts, double previous_reward) {
  if (previous_prices.size() != previous_efforts.size()) throw ConfigError("price and effort histories differ");
  std::vector<double> obs;
  obs.reserve(harvester_observation_size(previous_prices.size()));
  obs.insert(obs.end(), previous_prices.begin(), previous_prices.end());
  obs.insert(obs.end(), previous_efforts.begin(), previous_efforts.end());
  obs.push_back(previous_reward);
  return obs;
}

std::vector<double> build_policymaker_observation(const Matrix& effective_efforts, std::span<const double> stocks,
                                                  std::span<const double> budgets,
                                                  const Matrix& observed_valuations) {
  if (effective_efforts.cols() != stocks.size() || observed_valuations.cols() != stocks.size() ||
      observed_valuations.rows() != budgets.size())
    throw ConfigError("policymaker observation segments have inconsistent sizes");
  std::vector<double> obs;
  obs.reserve(policymaker_observation_size(effective_efforts.rows(), stocks.size(), budgets.size()));
  obs.insert(obs.end(), effective_efforts.data().begin(), effective_efforts.data().end());
  obs.insert(obs.end(), stocks.begin(), stocks.end());
  obs.insert(obs.end(), budgets.begin(), budgets.end());
  obs.insert(obs.end(), observed_valuations.data().begin(), observed_valuations.data().end());
  return obs;
}

void save_checkpoint(const std::filesystem::path& dir, std::span<const CheckpointAgent> agents,
                     const std::string& config_hash) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["config_hash"] = config_hash;
  manifest["agents"] = nlohmann::json::array();
  for (const CheckpointAgent& a : agents) {
    const auto write = [&](const std::string& suffix, auto&& fn) {
      const std::filesystem::path path = dir / (a.id + suffix);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw IoError("cannot write " + path.string());
      fn(out);
    };
    write(".mean.bin", [&](std::ostream& o) { a.policy->mean_net.save(o); });
    write(".value.bin", [&](std::ostream& o) { a.policy->value_net.save(o); });
    write(".logstd.bin", [&](std::ostream& o) {
      o.write(reinterpret_cast<const char*>(a.policy->log_std.data()),
              static_cast<std::streamsize>(a.policy->log_std.size() * sizeof(double)));
    });
    manifest["agents"].push_back({{"id", a.id},
                                  {"observation_size", a.policy->observation_size()},
                                  {"action_size", a.policy->action_size()}});
  }
  const std::filesystem::path mpath = dir / "manifest.json";
  std::ofstream out(mpath);
  if (!out) throw IoError("cannot write " + mpath.string());
  out << manifest.dump(2) << '\n';
}

GaussianPolicy load_policy(const std::filesystem::path& dir, const std::string& id) {
  const auto open = [&](const std::string& suffix) {
    const std::filesystem::path path = dir / (id + suffix);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
  };
  GaussianPolicy policy;
  {
    auto in = open(".mean.bin");
    policy.mean_net = nn::Mlp::load(in);
  }
  {
    auto in = open(".value.bin");
    policy.value_net = nn::Mlp::load(in);
  }
  policy.log_std.assign(policy.mean_net.output_size(), 0.0);
  auto in = open(".logstd.bin");
  in.read(reinterpret_cast<char*>(policy.log_std.data()),
          static_cast<std::streamsize>(policy.log_std.size() * sizeof(double)));
  if (!in) throw IoError("truncated log-std snapshot for " + id);
  return policy;
}

}  // namespace fm::rl
