#include <doctest.h>

#include <cmath>

#include "fm/error.hpp"
#include "fm/fishery.hpp"
#include "fm/verify/oracles.hpp"
#include "check_helpers.hpp"

using namespace fm;
using namespace fm::fishery;

namespace {

std::vector<HarvesterParams> harvesters(std::size_t n, std::size_t r, double skill = 1.0, double cost = 0.0) {
  return std::vector<HarvesterParams>(n, HarvesterParams{std::vector<double>(r, skill), cost});
}

}  // namespace

TEST_CASE("catchability is stock over twice S_eq, capped at 1") {
  const ResourceParams p{5.0, 1.0, 5.0};
  CHECK(catchability(5.0, p) == 0.5);
  CHECK(catchability(10.0, p) == 1.0);
  CHECK(catchability(25.0, p) == 1.0);
  CHECK(catchability(2.0, p) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(catchability(0.0, p) == 0.0);
}

TEST_CASE("total harvest follows q E and never exceeds the stock") {
  const ResourceParams p{5.0, 1.0, 5.0};
  CHECK(total_harvest(0.0, 3.0, p) == 0.0);
  CHECK(total_harvest(1.0, 5.0, p) == 0.5);
  CHECK(total_harvest(100.0, 0.1, p) == 0.1);
}

TEST_CASE("spawner-recruit map") {
  const ResourceParams p{5.0, 1.0, 5.0};
  CHECK(spawner_recruit(5.0, p) == 5.0);
  CHECK(spawner_recruit(0.0, p) == 0.0);
  CHECK(spawner_recruit(2.5, p) == doctest::Approx(4.121803176750321).epsilon(1e-14));
  CHECK(spawner_recruit(2.5, p) == doctest::Approx(2.5 * std::exp(0.5)).epsilon(1e-15));
}

TEST_CASE("one specialist at full effort from S_eq = 5") {
  const std::vector<ResourceParams> res{{5.0, 1.0, 5.0}};
  const ResourceState st{{5.0}, 0};
  const auto [next, out] = step(st, Matrix(1, 1, 1.0), harvesters(1, 1), res);
  CHECK(out.total_harvest[0] == 0.5);
  CHECK(out.individual_harvest(0, 0) == 0.5);
  CHECK(next.stocks[0] == doctest::Approx(4.5 * std::exp(0.1)).epsilon(1e-14));
  CHECK(next.stocks[0] == doctest::Approx(4.973269131340413).epsilon(1e-12));
  CHECK(next.time_step == 1);
}

TEST_CASE("zero efforts keep stocks at S_eq") {
  const std::vector<ResourceParams> res(2, {5.0, 1.0, 5.0});
  ResourceState st{{5.0, 5.0}, 0};
  for (int t = 0; t < 500; ++t) st = step(st, Matrix(3, 2), harvesters(3, 2), res).first;
  CHECK(st.stocks[0] == 5.0);
  CHECK(st.stocks[1] == 5.0);
  CHECK(st.time_step == 500);
}

TEST_CASE("individual harvests split by effective effort share") {
  const std::vector<ResourceParams> res{{5.0, 1.0, 5.0}};
  SUBCASE("identical agents get equal shares") {
    const auto [next, out] = step({{4.0}, 0}, Matrix(2, 1, 0.7), harvesters(2, 1), res);
    CHECK(out.individual_harvest(0, 0) == out.individual_harvest(1, 0));
    CHECK(out.individual_harvest(0, 0) + out.individual_harvest(1, 0) == doctest::Approx(out.total_harvest[0]));
  }
  SUBCASE("skills scale effort") {
    std::vector<HarvesterParams> hs{{{1.0}, 0.0}, {{0.5}, 0.0}};
    const auto [next, out] = step({{4.0}, 0}, Matrix(2, 1, 1.0), hs, res);
    CHECK(out.effective_efforts(1, 0) == 0.5);
    CHECK(out.total_efforts[0] == 1.5);
    CHECK(out.individual_harvest(0, 0) == doctest::Approx(2.0 * out.individual_harvest(1, 0)).epsilon(1e-14));
  }
  SUBCASE("no effort, no harvest") {
    const auto [next, out] = step({{4.0}, 0}, Matrix(2, 1), harvesters(2, 1), res);
    CHECK(out.total_harvest[0] == 0.0);
    CHECK(out.individual_harvest(0, 0) == 0.0);
  }
}

TEST_CASE("step rejects malformed input") {
  const std::vector<ResourceParams> res{{5.0, 1.0, 5.0}};
  CHECK_THROWS_AS(step({{5.0}, 0}, Matrix(1, 2), harvesters(1, 1), res), ConfigError);
  CHECK_THROWS_AS(step({{5.0}, 0}, Matrix(1, 1, -0.1), harvesters(1, 1), res), ConfigError);
  CHECK_THROWS_AS(step({{5.0}, 0}, Matrix(1, 1, NAN), harvesters(1, 1), res), ConfigError);
  CHECK_THROWS_AS(validate(ResourceParams{0.0, 1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(validate(HarvesterParams{{1.5}, 0.0}, 1), ConfigError);
}

TEST_CASE("revenue") {
  HarvestOutcome out;
  out.individual_harvest = Matrix(1, 2);
  out.individual_harvest(0, 0) = 0.5;
  out.individual_harvest(0, 1) = 0.25;
  CHECK(revenue(std::vector<double>{0.0, 0.0}, out, harvesters(1, 2))[0] == 0.0);
  CHECK(revenue(std::vector<double>{1.0, 2.0}, out, harvesters(1, 2, 1.0, 0.1))[0] == doctest::Approx(0.9));
  HarvestOutcome single;
  single.individual_harvest = Matrix(1, 1, 0.5);
  CHECK(revenue(std::vector<double>{2.0}, single, harvesters(1, 1))[0] == 1.0);
}

TEST_CASE("equilibrium stock") {
  const double k = std::exp(1.0) / (2.0 * (std::exp(1.0) - 1.0));
  CHECK(k == doctest::Approx(0.7909883534346632).epsilon(1e-15));
  CHECK(equilibrium_stock(1.0, 1, 1.0, 1.0) == doctest::Approx(k).epsilon(1e-15));
  CHECK(equilibrium_stock(0.8, 8, 1.0, 1.0) == doctest::Approx(5.062325461981845).epsilon(1e-14));
  CHECK(equilibrium_stock(0.45, 8, 1.0, 1.0) == doctest::Approx(2.8475580723647878).epsilon(1e-14));
  CHECK(equilibrium_stock(0.8, 8, 1.0, 1.0) == doctest::Approx(verify::equilibrium_stock_formula(0.8, 8, 1.0, 1.0)));
}

TEST_CASE("depletion is a strict inequality") {
  CHECK_FALSE(is_depleted({{5.0, 5.0}, 0}, 1e-4));
  CHECK(is_depleted({{5.0, 0.0}, 0}, 1e-4));
  CHECK_FALSE(is_depleted({{1e-4, 5.0}, 0}, 1e-4));
}

TEST_CASE("dynamics agree with an independent forward simulation") {
  const double s_eq = equilibrium_stock(0.45, 8, 1.0, 1.0);
  const std::vector<ResourceParams> res{{s_eq, 1.0, s_eq}};
  const auto ref = verify::simulate_stock(s_eq, 1.0, s_eq, 3.0, 500, 1e-4);
  ResourceState st{{s_eq}, 0};
  for (std::size_t t = 0; t + 1 < ref.stocks.size(); ++t) {
    const auto [next, out] = step(st, Matrix(3, 1, 1.0), harvesters(3, 1), res);
    CHECK(out.total_harvest[0] == doctest::Approx(ref.harvests[t]).epsilon(1e-12));
    CHECK(next.stocks[0] == doctest::Approx(ref.stocks[t + 1]).epsilon(1e-12));
    st = next;
  }
}

TEST_CASE("fishery property suite") {
  expect_passed(verify::fishery_suite(11));
}
