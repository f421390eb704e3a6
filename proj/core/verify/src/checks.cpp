#include "fm/verify/checks.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "fm/fishery.hpp"
#include "fm/market.hpp"
#include "fm/objectives.hpp"
#include "fm/rl.hpp"
#include "fm/sim.hpp"
#include "fm/stats.hpp"
#include "fm/verify/oracles.hpp"

namespace fm::verify {
namespace {

class Recorder {
 public:
  explicit Recorder(std::string name) : start_(std::chrono::steady_clock::now()) { result_.name = std::move(name); }

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    result_.passed = false;
    if (result_.failures.size() < 20) result_.failures.push_back(what);
  }

  void note(const std::string& s) { result_.summary += (result_.summary.empty() ? "" : "; ") + s; }

  CheckResult finish() {
    result_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return std::move(result_);
  }

 private:
  CheckResult result_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm(d) / std::max({norm(a), norm(b), 1e-12});
}

}  // namespace

CheckResult fishery_suite(std::uint64_t seed) {
  Recorder rec("fishery properties");
  Rng rng(seed);
  const std::size_t n_h = 8, n_r = 4;

  for (double m_s : {0.45, 0.8, 1.0}) {
    const double s_eq = fishery::equilibrium_stock(m_s, n_h, 1.0, 1.0);
    rec.expect(std::abs(s_eq - equilibrium_stock_formula(m_s, n_h, 1.0, 1.0)) <= 1e-12 * s_eq,
               fmt("S_eq(M_s=%g) disagrees with direct evaluation: %.17g", m_s, s_eq));
    const fishery::ResourceParams p{s_eq, 1.0, s_eq};
    rec.expect(fishery::spawner_recruit(s_eq, p) == s_eq, fmt("F(S_eq) != S_eq for M_s=%g", m_s));
  }

  const Matrix skills = sim::build_skills(n_h, n_r);
  std::vector<fishery::HarvesterParams> harvesters;
  for (std::size_t n = 0; n < n_h; ++n)
    harvesters.push_back({std::vector<double>(skills.row(n).begin(), skills.row(n).end()), 0.0});

  // zero effort: stocks stay at S_eq
  {
    const double s_eq = fishery::equilibrium_stock(0.8, n_h, 1.0, 1.0);
    const std::vector<fishery::ResourceParams> res(n_r, {s_eq, 1.0, s_eq});
    fishery::ResourceState st{std::vector<double>(n_r, s_eq), 0};
    double drift = 0.0;
    for (int t = 0; t < 500; ++t) {
      st = fishery::step(st, Matrix(n_h, n_r), harvesters, res).first;
      for (double s : st.stocks) drift = std::max(drift, std::abs(s - s_eq));
    }
    rec.expect(drift <= 1e-9, fmt("zero-effort drift %.3g", drift));
    rec.note(fmt("zero-effort drift %.3g", drift));
  }

  // random efforts and stocks: harvest bounded by stock, shares conserved
  double worst_share = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double s_eq = uniform(rng, 0.1, 10.0);
    const std::vector<fishery::ResourceParams> res(n_r, {s_eq, uniform(rng, 0.1, 2.0), s_eq});
    fishery::ResourceState st{std::vector<double>(n_r), 0};
    for (double& s : st.stocks) s = uniform(rng, 0.0, 3.0 * s_eq);
    Matrix efforts(n_h, n_r);
    for (double& e : efforts.data()) e = uniform01(rng) < 0.2 ? 0.0 : uniform(rng, 0.0, 5.0);
    const auto [next, out] = fishery::step(st, efforts, harvesters, res);
    for (std::size_t r = 0; r < n_r; ++r) {
      rec.expect(out.total_harvest[r] <= st.stocks[r], fmt("H_r %.17g exceeds stock %.17g", out.total_harvest[r],
                                                           st.stocks[r]));
      rec.expect(next.stocks[r] >= 0.0, "negative stock");
      double shares = 0.0;
      for (std::size_t n = 0; n < n_h; ++n) shares += out.individual_harvest(n, r);
      const double err = std::abs(shares - out.total_harvest[r]);
      worst_share = std::max(worst_share, err);
      rec.expect(err <= 1e-12, fmt("share conservation error %.3g", err));
      const double x = st.stocks[r] - out.total_harvest[r];
      rec.expect(next.stocks[r] == fishery::spawner_recruit(std::max(x, 0.0), res[r]), "stock update is not F(s - H)");
    }
  }
  rec.note(fmt("worst share error %.3g", worst_share));

  // M_s = 1 with every harvester at full effort does not deplete within 500 steps
  for (bool full_skill : {true, false}) {
    const double s_eq = fishery::equilibrium_stock(1.0, n_h, 1.0, 1.0);
    const std::vector<fishery::ResourceParams> res(n_r, {s_eq, 1.0, s_eq});
    std::vector<fishery::HarvesterParams> hs = harvesters;
    if (full_skill)
      for (auto& h : hs) std::fill(h.skills.begin(), h.skills.end(), 1.0);
    fishery::ResourceState st{std::vector<double>(n_r, s_eq), 0};
    double lowest = s_eq;
    bool depleted = false;
    for (int t = 0; t < 500 && !depleted; ++t) {
      st = fishery::step(st, Matrix(n_h, n_r, 1.0), hs, res).first;
      depleted = fishery::is_depleted(st, 1e-4);
      for (double s : st.stocks) lowest = std::min(lowest, s);
    }
    rec.expect(!depleted, full_skill ? "M_s=1 full effort (skill 1) depleted" : "M_s=1 full effort depleted");
    rec.note(fmt(full_skill ? "M_s=1 skill-1 min stock %.4g" : "M_s=1 default-skill min stock %.4g", lowest));
  }

  // M_s = 0.45 at full effort ends early (matches an independent forward simulation)
  {
    const double s_eq = fishery::equilibrium_stock(0.45, n_h, 1.0, 1.0);
    const std::vector<fishery::ResourceParams> res(n_r, {s_eq, 1.0, s_eq});
    fishery::ResourceState st{std::vector<double>(n_r, s_eq), 0};
    std::size_t t = 0;
    while (t < 500 && !fishery::is_depleted(st, 1e-4)) {
      st = fishery::step(st, Matrix(n_h, n_r, 1.0), harvesters, res).first;
      ++t;
    }
    const StockPath ref = simulate_stock(s_eq, 1.0, s_eq, 5.0, 500, 1e-4);  // 2 x 1.0 + 6 x 0.5
    rec.expect(ref.depleted && t == ref.harvests.size(), fmt("scarce full-effort length %g vs oracle %g", double(t),
                                                             double(ref.harvests.size())));
    rec.note(fmt("scarce full-effort episode length %g", double(t)));
  }
  return rec.finish();
}

CheckResult market_oracle_suite(std::uint64_t seed) {
  Recorder rec("market oracles");
  Rng rng(seed);

  double worst_eg = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_market(uniform_int(rng, 1, 3), uniform_int(rng, 1, 3), rng);
    const auto out = market::solve_equilibrium(inst);
    const auto solver = market::eg_objective(out.allocation, inst);
    const double oracle = eg_grid_maximum(inst);
    const double gap = solver ? std::abs(*solver - oracle) : INFINITY;
    worst_eg = std::max(worst_eg, gap);
    rec.expect(gap <= 1e-4, fmt("instance %g: |EG_solver - EG_grid| = %.3g", i, gap));
  }
  rec.note(fmt("worst EG gap %.3g over 200", worst_eg));

  double worst_res = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = random_market(uniform_int(rng, 1, 8), uniform_int(rng, 1, 8), rng);
    const auto out = market::solve_equilibrium(inst);
    const double r = market::equilibrium_residuals(inst, out).worst();
    worst_res = std::max(worst_res, r);
    rec.expect(r < 1e-6, fmt("instance %g: equilibrium residual %.3g", i, r));
  }
  rec.note(fmt("worst residual %.3g over 1000", worst_res));

  double worst_lp = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_market(uniform_int(rng, 1, 3), uniform_int(rng, 1, 2), rng);
    std::vector<double> prices(inst.supplies.size());
    for (double& p : prices) p = uniform01(rng) < 0.1 ? 0.0 : uniform(rng, 0.01, 2.0);
    const auto out = market::allocate_at_prices(inst, prices);
    const auto ref = welfare_by_vertex_enumeration(inst, prices);
    double welfare = 0.0;
    for (double u : out.buyer_utilities) welfare += u;
    const double gap = std::abs(welfare - ref.objective);
    worst_lp = std::max(worst_lp, gap);
    rec.expect(gap <= 1e-6, fmt("LP %g: welfare gap %.3g", i, gap));
    for (std::size_t b = 0; b < inst.budgets.size(); ++b) {
      double spend = 0.0;
      for (std::size_t r = 0; r < prices.size(); ++r) {
        spend += prices[r] * out.allocation(b, r);
        rec.expect(out.allocation(b, r) >= -1e-12, "negative allocation");
      }
      rec.expect(spend <= inst.budgets[b] + 1e-9, fmt("LP %g: budget exceeded by %.3g", i, spend - inst.budgets[b]));
    }
    const auto sold = out.allocation.column_sums();
    for (std::size_t r = 0; r < prices.size(); ++r)
      rec.expect(sold[r] <= inst.supplies[r] + 1e-9, fmt("LP %g: supply exceeded by %.3g", i, sold[r] - inst.supplies[r]));
  }
  rec.note(fmt("worst LP welfare gap %.3g over 100", worst_lp));
  return rec.finish();
}

CheckResult baseline_identities_suite(std::uint64_t seed) {
  Recorder rec("equilibrium-mode waste and leftover");
  sim::ScenarioConfig config;
  config.seed = seed;
  config.pricing = sim::PricingMode::market_equilibrium;
  auto agents = sim::make_learning_agents(config, 0);
  sim::Environment env(config, make_rng(seed, 0, sim::kEnvironmentAgent, StreamTag::buyers),
                       make_rng(seed, 0, sim::kEnvironmentAgent, StreamTag::obfuscation));
  double worst_waste = 0.0, worst_left = 0.0;
  std::size_t steps = 0, markets = 0;
  for (int e = 0; e < 10; ++e) {
    const auto log = sim::run_episode(env, agents, true);
    for (const auto& s : log.steps) {
      ++steps;
      if (s.market_skipped) continue;
      ++markets;
      worst_waste = std::max(worst_waste, s.wasted_fraction.value_or(0.0));
      worst_left = std::max(worst_left, s.leftover_budget.value_or(0.0));
    }
  }
  rec.expect(worst_waste < 1e-6, fmt("wasted fraction reached %.3g", worst_waste));
  rec.expect(worst_left < 1e-6, fmt("leftover budget reached %.3g", worst_left));
  rec.expect(markets > 0, "no market was ever cleared");
  rec.note(fmt("%g steps, %g markets", double(steps), double(markets)));
  rec.note(fmt("worst waste %.3g, worst leftover %.3g", worst_waste, worst_left));
  return rec.finish();
}

CheckResult rl_numeric_suite(std::uint64_t seed) {
  Recorder rec("PPO numerics");
  Rng rng(seed);

  // analytic loss gradient against central differences
  {
    rl::PpoConfig cfg;
    rl::GaussianPolicy policy(3, 2, 16, 0.0);
    policy.init(rng);
    for (double& s : policy.log_std) s = uniform(rng, -0.5, 0.5);
    std::vector<rl::TrainingSample> batch;
    for (int i = 0; i < 24; ++i) {
      rl::TrainingSample s;
      for (int k = 0; k < 3; ++k) s.observation.push_back(uniform(rng, -1.0, 1.0));
      const auto mean = policy.mean_net.forward(s.observation);
      for (int k = 0; k < 2; ++k) {
        s.old_mean.push_back(mean[k] + uniform(rng, -0.1, 0.1));
        s.old_log_std.push_back(policy.log_std[k] + uniform(rng, -0.1, 0.1));
        s.raw_action.push_back(s.old_mean[k] + std::exp(s.old_log_std[k]) * standard_normal(rng));
      }
      s.old_log_prob = rl::gaussian_log_prob(s.raw_action, s.old_mean, s.old_log_std);
      s.advantage = standard_normal(rng);
      s.old_value = uniform(rng, -1.0, 1.0);
      s.value_target = standard_normal(rng);
      batch.push_back(std::move(s));
    }
    std::vector<double> analytic(policy.parameter_count(), 0.0);
    rl::ppo_loss(policy, batch, 0.2, cfg, analytic);
    const auto loss_at = [&](std::span<const double> flat) {
      rl::GaussianPolicy p = policy;
      p.set_flat_parameters(flat);
      return rl::ppo_loss(p, batch, 0.2, cfg).total;
    };
    const auto flat = policy.flat_parameters();
    const auto numeric = numeric_gradient(loss_at, flat, 1e-6);
    const std::size_t policy_part = policy.mean_net.parameter_count() + policy.log_std.size();
    const double err_policy = relative_error(std::span(analytic).first(policy_part),
                                             std::span(numeric).first(policy_part));
    const double err_value = relative_error(std::span(analytic).subspan(policy_part),
                                            std::span(numeric).subspan(policy_part));
    rec.expect(err_policy < 1e-3, fmt("policy gradient relative error %.3g", err_policy));
    rec.expect(err_value < 1e-3, fmt("value gradient relative error %.3g", err_value));
    rec.note(fmt("gradient rel. error policy %.2g, value %.2g", err_policy, err_value));
  }

  // GAE with lambda = 1 is the discounted return minus the baseline
  {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = uniform_int(rng, 1, 40);
      std::vector<double> rewards(n), values(n);
      for (auto& r : rewards) r = uniform(rng, -1.0, 1.0);
      for (auto& v : values) v = uniform(rng, -1.0, 1.0);
      const double bootstrap = uniform01(rng) < 0.5 ? 0.0 : uniform(rng, -1.0, 1.0);
      const double gamma = 0.99;
      const auto est = rl::gae(rewards, values, bootstrap, gamma, 1.0);
      for (std::size_t t = 0; t < n; ++t) {
        double ret = 0.0, discount = 1.0;
        for (std::size_t k = t; k < n; ++k) {
          ret += discount * rewards[k];
          discount *= gamma;
        }
        ret += discount * bootstrap;
        worst = std::max({worst, std::abs(est.advantages[t] - (ret - values[t])), std::abs(est.returns[t] - ret)});
      }
    }
    rec.expect(worst <= 1e-12, fmt("GAE(lambda=1) deviates from discounted returns by %.3g", worst));
    rec.note(fmt("GAE deviation %.2g", worst));
  }

  // the first minibatch of the first epoch sees ratio 1 and clips nothing
  {
    rl::PpoConfig cfg;
    cfg.train_batch_size = 200;
    cfg.minibatch_size = 64;
    cfg.sgd_iterations = 3;
    rl::PpoAgent agent("probe", 3, {{0.0, 0.0}, {1.0, 1.0}}, cfg, Rng(seed + 1), Rng(seed + 2), Rng(seed + 3));
    std::size_t steps = 0;
    while (steps < 200) {
      for (int t = 0; t < 50; ++t, ++steps) {
        std::vector<double> obs{uniform01(rng), uniform01(rng), uniform01(rng)};
        const auto a = agent.act(obs);
        agent.observe(a[0] - a[1], t == 49);
      }
    }
    const auto diag = agent.maybe_update();
    rec.expect(diag.has_value(), "no update ran with a full batch");
    if (diag) {
      rec.expect(diag->first_max_ratio_deviation <= 1e-12,
                 fmt("first-epoch ratio deviates from 1 by %.3g", diag->first_max_ratio_deviation));
      rec.expect(diag->first_clip_fraction == 0.0, fmt("first-epoch clip fraction %.3g", diag->first_clip_fraction));
      rec.note(fmt("first-epoch max |ratio-1| %.2g", diag->first_max_ratio_deviation));
    }
  }

  // seeded 3-episode training run is bit-reproducible
  {
    sim::ScenarioConfig config;
    config.harvesters = 2;
    config.resources = 2;
    config.buyers = 2;
    config.max_steps = 60;
    config.seed = seed;
    config.pricing = sim::PricingMode::policymaker;
    for (auto* p : {&config.harvester_ppo, &config.policymaker_ppo}) {
      p->train_batch_size = 100;
      p->minibatch_size = 32;
      p->sgd_iterations = 2;
      p->hidden_units = 16;
    }
    const auto fingerprint = [&config] {
      std::vector<std::uint64_t> bits;
      auto agents = sim::make_learning_agents(config, 0);
      sim::Environment env(config, make_rng(config.seed, 0, sim::kEnvironmentAgent, StreamTag::buyers),
                           make_rng(config.seed, 0, sim::kEnvironmentAgent, StreamTag::obfuscation));
      std::size_t updates = 0;
      for (int e = 0; e < 3; ++e) {
        const auto log = sim::run_episode(env, agents, true);
        for (const auto& s : log.steps) {
          for (double v : s.prices) bits.push_back(std::bit_cast<std::uint64_t>(v));
          for (double v : s.efforts.data()) bits.push_back(std::bit_cast<std::uint64_t>(v));
          bits.push_back(std::bit_cast<std::uint64_t>(s.reward.total));
        }
        for (double v : log.metrics.values) bits.push_back(std::bit_cast<std::uint64_t>(v));
        for (auto& h : agents.harvesters) h->end_episode();
        agents.policymaker->end_episode();
      }
      for (auto* c : {agents.harvesters[0].get(), agents.harvesters[1].get(), agents.policymaker.get()}) {
        const auto* ppo = static_cast<sim::PpoController*>(c);
        updates += ppo->updates().size();
        for (double v : ppo->agent().policy().flat_parameters()) bits.push_back(std::bit_cast<std::uint64_t>(v));
      }
      return std::pair(bits, updates);
    };
    const auto [a, updates] = fingerprint();
    const auto [b, updates_b] = fingerprint();
    rec.expect(updates > 0, "the reproducibility run performed no update");
    rec.expect(a == b && updates == updates_b, "two seeded runs diverged");
    rec.note(fmt("reproducibility run: %g values, %g updates", double(a.size()), double(updates)));
  }
  return rec.finish();
}

CheckResult fairness_stats_suite() {
  Recorder rec("fairness indices and t-test");
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const double j = objectives::jain(std::vector<double>{1, 0, 0, 0});
  const double g = objectives::gini(std::vector<double>{0, 1});
  const double a = objectives::atkinson(std::vector<double>{1, 4});
  rec.expect(near(j, 0.25), fmt("Jain(1,0,0,0) = %.17g", j));
  rec.expect(near(g, 0.5), fmt("Gini(0,1) = %.17g", g));
  rec.expect(near(a, 0.2), fmt("Atkinson(1,4) = %.17g", a));
  rec.note(fmt("Jain %.17g, Gini %.17g", j, g));
  rec.note(fmt("Atkinson %.17g", a));

  const std::vector<double> x{1, 2, 3, 4}, y{2, 3, 4, 5};
  const auto t = stats::student_t_test(x, y);
  const auto t_rev = stats::student_t_test(y, x);
  // reference from an independent statistics package
  rec.expect(std::abs(t.p - 0.3153335962012298) <= 1e-9, fmt("p((1,2,3,4),(2,3,4,5)) = %.17g", t.p));
  rec.expect(t.df == 6.0, "df should be 6");
  rec.expect(t.p == t_rev.p, "t-test is not symmetric");
  rec.expect(stats::student_t_test(x, x).p == 1.0, "identical samples should give p = 1");
  const std::vector<double> s{1, 2, 3}, s100{101, 102, 103};
  rec.expect(stats::student_t_test(s, s100).p < 1e-6, "shift by 100 should give p < 1e-6");
  rec.note(fmt("t = %.6g, p = %.6g", t.t, t.p));
  return rec.finish();
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  const std::pair<const char*, std::function<CheckResult()>> suites[] = {
      {"fishery properties", [seed] { return fishery_suite(seed + 1); }},
      {"market oracles", [seed] { return market_oracle_suite(seed + 2); }},
      {"equilibrium-mode waste and leftover", [seed] { return baseline_identities_suite(seed + 3); }},
      {"PPO numerics", [seed] { return rl_numeric_suite(seed + 4); }},
      {"fairness indices and t-test", [] { return fairness_stats_suite(); }},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, run] : suites) {
    try {
      out.push_back(run());
    } catch (const std::exception& e) {
      CheckResult r;
      r.name = name;
      r.passed = false;
      r.failures.push_back(std::string("exception: ") + e.what());
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace fm::verify
