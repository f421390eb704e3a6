#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fm/sim.hpp"

namespace fm::stats {

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> values);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Two-sided, two-sample Student's t-test with pooled variance. With zero
/// pooled variance, p = 1 for equal means and 0 otherwise. Throws
/// ConfigError if either sample has fewer than two values.
TTest student_t_test(std::span<const double> a, std::span<const double> b);

struct ComparisonRow {
  std::string metric;
  double baseline_mean = 0.0;
  double treatment_mean = 0.0;
  double relative_difference = 0.0;  // percent; 0 when the means are equal, NaN when the baseline is 0
  double p_value = 1.0;              // NaN when fewer than two trials define the metric
};

struct ComparisonReport {
  std::size_t baseline_trials = 0;
  std::size_t treatment_trials = 0;
  std::vector<ComparisonRow> rows;
};

/// One row per metric, from per-trial summaries; trials where a metric is
/// undefined are left out of that row.
ComparisonReport compare(std::span<const sim::EpisodeMetrics> baseline,
                         std::span<const sim::EpisodeMetrics> treatment);

std::string format_table(const ComparisonReport& report);

}  // namespace fm::stats
