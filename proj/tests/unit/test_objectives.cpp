#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fm/error.hpp"
#include "fm/market.hpp"
#include "fm/objectives.hpp"

using namespace fm;
using namespace fm::objectives;
using V = std::vector<double>;

TEST_CASE("Jain index") {
  CHECK(jain(V{3, 3, 3, 3}) == 1.0);
  CHECK(jain(V{1, 0, 0, 0}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(jain(V{1, 2}) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS(jain(V{0, 0}), std::domain_error);
  // scale invariance
  CHECK(jain(V{0.5, 1.5, 2.0}) == jain(V{1.0, 3.0, 4.0}));
}

TEST_CASE("Gini coefficient") {
  CHECK(gini(V{5, 5, 5}) == 0.0);
  CHECK(gini(V{0, 1}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gini(V{1, 1, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(gini(V{0, 0, 0}), std::domain_error);
}

TEST_CASE("Atkinson index") {
  CHECK(atkinson(V{2, 2, 2}) == 0.0);
  CHECK(atkinson(V{0, 4}) == 1.0);
  CHECK(atkinson(V{1, 4}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(atkinson(V{0, 0}), std::domain_error);
}

TEST_CASE("fairness scores point the same way") {
  const FairnessIndex j{FairnessKind::jain}, g{FairnessKind::gini}, a{FairnessKind::atkinson};
  for (const auto& idx : {j, g, a}) {
    CHECK(fairness_score(V{2, 2}, idx) == doctest::Approx(1.0));
    CHECK(fairness_score(V{0, 0, 0}, idx) == 1.0);
    CHECK(fairness_score(V{1, 3}, idx) < fairness_score(V{2, 2}, idx));
  }
  CHECK(fairness_score(V{0, 1}, g) == doctest::Approx(0.5));
  CHECK(fairness_score(V{1, 4}, a) == doctest::Approx(0.8));
  CHECK(fairness_score(V{-1, 1}, j) == doctest::Approx(0.5));  // negatives clamp to 0
}

TEST_CASE("sustainability term") {
  CHECK(sustainability_term(V{5, 6}, V{5, 5}) == 0.0);
  CHECK(sustainability_term(V{4, 6}, V{5, 5}) == -1.0);
  CHECK(sustainability_term(V{4, 2}, V{5, 5}) == -3.0);
}

TEST_CASE("obfuscation") {
  Rng rng(1);
  Matrix v(1, 3);
  v(0, 0) = 0.31;
  v(0, 1) = 1.0;
  v(0, 2) = 0.0;
  SUBCASE("identity") { CHECK(obfuscate(v, {ObfuscationKind::identity}, rng) == v); }
  SUBCASE("bins") {
    const auto out = obfuscate(v, {ObfuscationKind::bins, 10, 0.1}, rng);
    CHECK(out(0, 0) == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(out(0, 2) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(bin_midpoint(0.3, 10) == doctest::Approx(0.35));
    CHECK(bin_midpoint(0.5, 1) == 0.5);
  }
  SUBCASE("noise stays in (v, v + y)") {
    Matrix half(50, 20, 0.5);
    const auto out = obfuscate(half, {ObfuscationKind::uniform_noise, 10, 0.1}, rng);
    for (double x : out.data()) {
      CHECK(x > 0.5);
      CHECK(x < 0.6);
    }
  }
  SUBCASE("the same seed gives the same noise") {
    Rng a(9), b(9);
    CHECK(obfuscate(v, {ObfuscationKind::uniform_noise, 10, 0.2}, a) ==
          obfuscate(v, {ObfuscationKind::uniform_noise, 10, 0.2}, b));
  }
}

TEST_CASE("policymaker reward") {
  const V rev{1.0, 3.0}, util{2.0, 2.0}, stocks{4.0, 2.0}, seq{5.0, 5.0}, prices{1.0, 2.0}, ref{1.0, 1.0};
  const RewardInputs in{rev, util, stocks, seq, prices, std::span<const double>(ref)};
  const FairnessIndex jain_index;
  CHECK(policymaker_reward(in, {}, jain_index).total == 0.0);
  CHECK(policymaker_reward(in, {0, 0, 1, 0, 0}, jain_index).total == -3.0);
  CHECK(policymaker_reward(in, {0, 0, 0, 0, 1}, jain_index).total == -1.0);
  const auto all = policymaker_reward(in, {1, 1, 1, 1, 0}, jain_index);
  CHECK(all.harvester_welfare == 2.0);
  CHECK(all.buyer_welfare == 2.0);
  // Fair = mean of Jain over harvesters (0.8) and buyers (1)
  CHECK(all.fairness == doctest::Approx(0.9));
  CHECK(all.total == doctest::Approx(2.0 + 2.0 - 3.0 + 0.9));
  const RewardInputs no_ref{rev, util, stocks, seq, prices, std::nullopt};
  CHECK_THROWS_AS(policymaker_reward(no_ref, {0, 0, 0, 0, 1}, jain_index), ConfigError);
  CHECK_THROWS_AS(validate(ObjectiveWeights{-1, 0, 0, 0, 0}), ConfigError);
}

TEST_CASE("wasted resources and leftover budget") {
  Matrix all(1, 2);
  all(0, 0) = 1.0;
  all(0, 1) = 1.0;
  CHECK(*wasted_fraction(all, V{1, 1}) == 0.0);
  CHECK(*wasted_fraction(Matrix(1, 2), V{1, 1}) == 1.0);
  Matrix part(1, 2);
  part(0, 0) = 1.0;
  part(0, 1) = 0.5;
  CHECK(*wasted_fraction(part, V{1, 1}) == doctest::Approx(0.25));
  CHECK_FALSE(wasted_fraction(Matrix(1, 2), V{0, 0}).has_value());

  Matrix spend(2, 1);
  spend(0, 0) = 1.0;
  spend(1, 0) = 0.4;
  CHECK(leftover_budget_fraction(spend, V{1.0}, V{1, 1}) == doctest::Approx(0.3));
  CHECK(leftover_budget_fraction(Matrix(2, 1), V{1.0}, V{1, 1}) == 1.0);

  const market::MarketInstance inst{{0.4, 0.9}, Matrix(2, 2, 0.5), {1.0, 2.0}};
  const auto eq = market::solve_equilibrium(inst);
  CHECK(leftover_budget_fraction(eq.allocation, eq.prices, inst.budgets) < 1e-12);
  CHECK(*wasted_fraction(eq.allocation, inst.supplies) < 1e-12);
}
