#include <benchmark/benchmark.h>

#include "fm/market.hpp"
#include "fm/nn.hpp"
#include "fm/rl.hpp"
#include "fm/sim.hpp"
#include "fm/verify/oracles.hpp"

using namespace fm;

static void BM_SolveEquilibrium(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<market::MarketInstance> markets;
  for (int i = 0; i < 64; ++i) markets.push_back(verify::random_market(n, n / 2, rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(market::solve_equilibrium(markets[i++ % markets.size()]));
}
BENCHMARK(BM_SolveEquilibrium)->Arg(4)->Arg(8)->Arg(16);

static void BM_AllocateAtPrices(benchmark::State& state) {
  Rng rng(2);
  const auto m = verify::random_market(8, 4, rng);
  const std::vector<double> prices{0.5, 1.0, 1.5, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(market::allocate_at_prices(m, prices));
}
BENCHMARK(BM_AllocateAtPrices);

static void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(3);
  nn::Mlp net(76, 4, 64);
  net.init_uniform(rng);
  std::vector<double> x(76, 0.3), gout(4, 1.0), grad(net.parameter_count());
  for (auto _ : state) {
    nn::Mlp::Tape tape;
    benchmark::DoNotOptimize(net.forward(x, tape));
    net.backward(tape, gout, grad);
  }
}
BENCHMARK(BM_MlpForwardBackward);

static void BM_EnvironmentStep(benchmark::State& state) {
  sim::ScenarioConfig c;
  c.pricing = state.range(0) ? sim::PricingMode::policymaker : sim::PricingMode::market_equilibrium;
  auto agents = sim::make_learning_agents(c, 0);
  sim::Environment env(c, Rng(4), Rng(5));
  for (auto _ : state) {
    if (env.done()) env.reset();
    benchmark::DoNotOptimize(env.step(agents));
  }
}
BENCHMARK(BM_EnvironmentStep)->Arg(0)->Arg(1);

static void BM_PpoUpdate(benchmark::State& state) {
  rl::PpoConfig cfg;
  cfg.train_batch_size = 512;
  cfg.sgd_iterations = 4;
  Rng rng(6);
  rl::GaussianPolicy policy(9, 4, 64, 0.0);
  policy.init(rng);
  std::vector<rl::Trajectory> batch(1);
  for (std::size_t t = 0; t < cfg.train_batch_size; ++t) {
    std::vector<double> obs(9, 0.1 * static_cast<double>(t % 7));
    auto s = rl::act(policy, obs, rng, {std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)});
    batch[0].steps.push_back({obs, s.raw_action, s.mean, policy.log_std, s.log_prob, 1.0, s.value, false});
  }
  for (auto _ : state) {
    auto p = policy;
    rl::LearnerState learner{nn::make_adam_state(p.parameter_count()), cfg.initial_kl_coeff};
    Rng shuffle(7);
    benchmark::DoNotOptimize(rl::ppo_update(p, learner, batch, cfg, shuffle));
  }
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
