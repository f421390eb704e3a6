#include <doctest.h>

#include "fm/error.hpp"
#include "fm/lp.hpp"
#include "fm/market.hpp"
#include "fm/verify/oracles.hpp"

using namespace fm;
using namespace fm::lp;

namespace {

Problem problem(std::vector<double> c, std::vector<std::vector<double>> a, std::vector<double> b) {
  Matrix m(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) m(i, j) = a[i][j];
  return {std::move(c), std::move(m), std::move(b)};
}

}  // namespace

TEST_CASE("one variable") {
  const auto p = problem({1.0}, {{1.0}}, {1.0});
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.primal[0] == 1.0);
  CHECK(s.objective == 1.0);
  CHECK(s.dual[0] == 1.0);
}

TEST_CASE("degenerate optimal face") {
  const auto p = problem({1.0, 1.0}, {{1.0, 1.0}}, {1.0});
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective == doctest::Approx(1.0));
  CHECK(certify(p, s).worst() < 1e-12);
}

TEST_CASE("three variables, two constraints") {
  // max 3x + 2y + 4z  s.t.  x + y + 2z <= 4,  2x + z <= 5
  const auto p = problem({3.0, 2.0, 4.0}, {{1.0, 1.0, 2.0}, {2.0, 0.0, 1.0}}, {4.0, 5.0});
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  // vertex enumeration by hand: (2.5, 1.5, 0) gives 10.5, the maximum
  CHECK(s.objective == doctest::Approx(10.5).epsilon(1e-12));
  CHECK(s.primal[0] == doctest::Approx(2.5));
  CHECK(s.primal[1] == doctest::Approx(1.5));
  CHECK(certify(p, s).worst() < 1e-12);
}

TEST_CASE("negative right-hand sides go through phase one") {
  // max -x - y  s.t.  -x - y <= -2 (x + y >= 2),  x <= 3
  const auto p = problem({-1.0, -1.0}, {{-1.0, -1.0}, {1.0, 0.0}}, {-2.0, 3.0});
  const auto s = solve(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective == doctest::Approx(-2.0));
  CHECK(certify(p, s).worst() < 1e-12);
}

TEST_CASE("infeasible and unbounded problems") {
  CHECK(solve(problem({1.0}, {{1.0}, {-1.0}}, {1.0, -2.0})).status == Status::infeasible);
  CHECK(solve(problem({1.0, 1.0}, {{1.0, -1.0}}, {1.0})).status == Status::unbounded);
}

TEST_CASE("dimension mismatch") {
  Problem p{{1.0, 2.0}, Matrix(1, 3), {1.0}};
  CHECK_THROWS_AS(solve(p), ConfigError);
}

TEST_CASE("welfare LPs agree with vertex enumeration and certify") {
  Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    const auto inst = verify::random_market(1 + i % 3, 1 + (i / 3) % 3, rng);
    std::vector<double> prices(inst.supplies.size());
    for (double& x : prices) x = uniform01(rng) < 0.2 ? 0.0 : 2.0 * uniform01(rng);
    const std::size_t nb = inst.budgets.size(), ng = prices.size();
    Problem p{std::vector<double>(nb * ng), Matrix(nb + ng, nb * ng), std::vector<double>(nb + ng)};
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < ng; ++r) {
        p.objective[b * ng + r] = inst.valuations(b, r);
        p.constraints(b, b * ng + r) = prices[r];
        p.constraints(nb + r, b * ng + r) = 1.0;
      }
    for (std::size_t b = 0; b < nb; ++b) p.bounds[b] = inst.budgets[b];
    for (std::size_t r = 0; r < ng; ++r) p.bounds[nb + r] = inst.supplies[r];
    const auto s = solve(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(certify(p, s).worst() < 1e-9);
    CHECK(s.objective == doctest::Approx(verify::welfare_by_vertex_enumeration(inst, prices).objective).epsilon(1e-9));
  }
}
