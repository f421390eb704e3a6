#include <doctest.h>

#include <cmath>

#include "check_helpers.hpp"
#include "fm/error.hpp"
#include "fm/stats.hpp"

using namespace fm;

TEST_CASE("moments") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(stats::mean(v) == 5.0);
  CHECK(stats::sample_std(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(stats::sample_std(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("t-test") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
  const auto ab = stats::student_t_test(a, b), ba = stats::student_t_test(b, a);
  CHECK(ab.p == ba.p);
  CHECK(ab.t == -ba.t);
  CHECK(ab.df == 6.0);
  CHECK(stats::student_t_test(a, a).p == doctest::Approx(1.0));

  std::vector<double> far = a;
  for (double& x : far) x += 100.0;
  CHECK(stats::student_t_test(a, far).p < 1e-10);

  const std::vector<double> flat{2, 2, 2};
  CHECK(stats::student_t_test(flat, flat).p == 1.0);
  CHECK(stats::student_t_test(flat, std::vector<double>{3, 3, 3}).p == 0.0);
  CHECK_THROWS_AS(stats::student_t_test(std::vector<double>{1}, a), ConfigError);
}

TEST_CASE("comparisons") {
  std::vector<sim::EpisodeMetrics> base(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (auto& v : base[i].values) v = 1.0 + static_cast<double>(i);

  const auto same = stats::compare(base, base);
  CHECK(same.rows.size() == sim::kMetricCount);
  for (const auto& row : same.rows) {
    CHECK(row.relative_difference == 0.0);
    CHECK(row.p_value == doctest::Approx(1.0));
  }

  auto up = base;
  for (auto& m : up) m[sim::Metric::buyer_welfare] *= 1.5;
  const auto report = stats::compare(base, up);
  const auto& row = report.rows[static_cast<std::size_t>(sim::Metric::buyer_welfare)];
  CHECK(row.metric == "buyer_welfare");
  CHECK(row.relative_difference == doctest::Approx(50.0));

  auto undefined = base;
  for (std::size_t i = 0; i < 2; ++i) undefined[i][sim::Metric::price_gap] = std::nan("");
  const auto partial = stats::compare(base, undefined);
  CHECK(std::isnan(partial.rows[static_cast<std::size_t>(sim::Metric::price_gap)].p_value));
  CHECK_FALSE(stats::format_table(report).empty());
}

TEST_CASE("fairness and statistics suite") { expect_passed(verify::fairness_stats_suite()); }
