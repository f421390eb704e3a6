#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "check_helpers.hpp"
#include "fm/error.hpp"
#include "fm/rl.hpp"

using namespace fm;
using namespace fm::rl;

TEST_CASE("Gaussian log density") {
  const std::vector<double> a{0.3, -1.2}, m{0.1, 0.4}, ls{-0.5, 0.2};
  double ref = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double sd = std::exp(ls[i]);
    ref += std::log(std::exp(-0.5 * (a[i] - m[i]) * (a[i] - m[i]) / (sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi)));
  }
  CHECK(std::abs(gaussian_log_prob(a, m, ls) - ref) <= 1e-10);
}

TEST_CASE("sampling and clipping") {
  Rng rng(3);
  GaussianPolicy p(2, 1, 8, 0.0);
  p.init(rng);
  const ActionBounds bounds{{0.0}, {1.0}};
  const std::vector<double> obs{0.2, 0.4};

  SUBCASE("log-prob is of the raw action") {
    for (int i = 0; i < 20; ++i) {
      const auto s = act(p, obs, rng, bounds);
      CHECK(std::abs(s.log_prob - gaussian_log_prob(s.raw_action, s.mean, p.log_std)) <= 1e-10);
      CHECK(s.env_action[0] == std::clamp(s.raw_action[0], 0.0, 1.0));
    }
  }
  SUBCASE("vanishing spread acts at the clipped mean") {
    p.log_std = {-20.0};
    const auto s = act(p, obs, rng, bounds);
    CHECK(s.env_action[0] == doctest::Approx(std::clamp(s.mean[0], 0.0, 1.0)).epsilon(1e-8));
  }
  SUBCASE("mean far above the bound acts at the bound") {
    auto params = p.mean_net.parameters();
    params[params.size() - 1] = 50.0;  // output bias
    p.log_std = {-5.0};
    CHECK(act(p, obs, rng, bounds).env_action[0] == 1.0);
  }
}

TEST_CASE("GAE") {
  CHECK(gae(std::vector<double>(4, 0.0), std::vector<double>(4, 0.0), 0.0, 0.99, 0.95).advantages ==
        std::vector<double>(4, 0.0));
  const auto one = gae(std::vector<double>{2.0}, std::vector<double>{0.5}, 3.0, 0.9, 1.0);
  CHECK(one.advantages[0] == doctest::Approx(2.0 + 0.9 * 3.0 - 0.5));
  // three steps, lambda = 1: returns 1 + .9*2 + .81*3 = 5.23, 2 + .9*3 = 4.7, 3
  const auto three = gae(std::vector<double>{1, 2, 3}, std::vector<double>{0.5, 0.25, 1.0}, 0.0, 0.9, 1.0);
  CHECK(std::abs(three.returns[0] - 5.23) <= 1e-12);
  CHECK(std::abs(three.returns[1] - 4.7) <= 1e-12);
  CHECK(std::abs(three.returns[2] - 3.0) <= 1e-12);
  CHECK(std::abs(three.advantages[0] - 4.73) <= 1e-12);
  CHECK_THROWS_AS(gae(std::vector<double>{1}, std::vector<double>{1, 2}, 0, 0.9, 1), ConfigError);
}

TEST_CASE("clipped surrogate") {
  CHECK(clipped_surrogate(2.0, 1.0, 0.3) == doctest::Approx(1.3));
  CHECK(clipped_surrogate(2.0, -1.0, 0.3) == doctest::Approx(-2.0));
  CHECK(clipped_surrogate(0.5, -1.0, 0.3) == doctest::Approx(-0.7));
  CHECK(clipped_surrogate(1.1, 2.0, 0.3) == doctest::Approx(2.2));
}

TEST_CASE("observations") {
  CHECK(build_harvester_observation(std::vector<double>{0, 0}, std::vector<double>{0, 0}, 0.0) ==
        std::vector<double>(5, 0.0));
  CHECK(build_harvester_observation(std::vector<double>{1, 2}, std::vector<double>{0.5, 0}, 3.0) ==
        std::vector<double>{1, 2, 0.5, 0, 3});
  CHECK(harvester_observation_size(4) == 9);
  CHECK(policymaker_observation_size(8, 4, 8) == 76);
  Matrix eff(2, 1, 0.5), val(1, 1, 0.25);
  CHECK(build_policymaker_observation(eff, std::vector<double>{3.0}, std::vector<double>{0.9}, val) ==
        std::vector<double>{0.5, 0.5, 3.0, 0.9, 0.25});
}

TEST_CASE("PPO agent bookkeeping") {
  PpoConfig cfg;
  cfg.train_batch_size = 30;
  cfg.minibatch_size = 8;
  cfg.sgd_iterations = 2;
  PpoAgent agent("a", 2, {{0.0}, {1.0}}, cfg, Rng(1), Rng(2), Rng(3));
  const std::vector<double> obs{0.1, 0.2};
  agent.act(obs);
  CHECK_THROWS_AS(agent.act(obs), ConfigError);
  agent.observe(1.0, false);
  CHECK_THROWS_AS(agent.observe(1.0, false), ConfigError);
  for (int t = 0; t < 19; ++t) {
    agent.act(obs);
    agent.observe(1.0, t == 18);
  }
  CHECK(agent.buffered_steps() == 20);
  CHECK_FALSE(agent.maybe_update().has_value());
  const auto before = agent.policy().flat_parameters();
  for (int t = 0; t < 20; ++t) {
    agent.act(obs);
    agent.observe(1.0, t == 19);
  }
  const auto diag = agent.maybe_update();
  REQUIRE(diag.has_value());
  CHECK(diag->samples == 40);
  CHECK(diag->minibatches == 2 * 5);
  CHECK(agent.buffered_steps() == 0);
  CHECK(agent.policy().flat_parameters() != before);

  SUBCASE("frozen agents do not record") {
    agent.set_learning(false);
    agent.act(obs);
    agent.act(obs);
    CHECK(agent.buffered_steps() == 0);
  }
}

TEST_CASE("independent learners share nothing") {
  PpoConfig cfg;
  cfg.train_batch_size = 10;
  cfg.minibatch_size = 5;
  cfg.sgd_iterations = 1;
  PpoAgent a("a", 1, {{0.0}, {1.0}}, cfg, Rng(1), Rng(2), Rng(3));
  PpoAgent b("b", 1, {{0.0}, {1.0}}, cfg, Rng(1), Rng(2), Rng(3));
  for (int t = 0; t < 10; ++t) {
    a.act(std::vector<double>{1.0});
    a.observe(t, t == 9);
  }
  a.maybe_update();
  PpoAgent fresh("b", 1, {{0.0}, {1.0}}, cfg, Rng(1), Rng(2), Rng(3));
  CHECK(b.policy() == fresh.policy());
  CHECK_FALSE(a.policy() == b.policy());
}

TEST_CASE("checkpoint round trip") {
  Rng rng(5);
  GaussianPolicy p(4, 2, 16, -0.3);
  p.init(rng);
  const auto dir = std::filesystem::temp_directory_path() / "fm_ckpt_test";
  std::filesystem::remove_all(dir);
  const std::vector<CheckpointAgent> agents{{"harvester_0", &p}};
  save_checkpoint(dir, agents, "abc123");
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(load_policy(dir, "harvester_0") == p);
  CHECK_THROWS_AS(load_policy(dir, "missing"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config validation") {
  PpoConfig c;
  CHECK_NOTHROW(validate(c));
  c.minibatch_size = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.clip_param = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("PPO numeric suite") { expect_passed(verify::rl_numeric_suite(14)); }
