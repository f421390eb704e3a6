#include "fm/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fm/error.hpp"


namespace fm::stats {
namespace {

std::vector<double> defined(std::span<const sim::EpisodeMetrics> trials, std::size_t metric) {
  std::vector<double> v;
  for (const auto& t : trials)
    if (!std::isnan(t.values[metric])) v.push_back(t.values[metric]);
  return v;
}

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

TTest student_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("t-test needs at least two values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  double ss = 0.0;
  for (double x : a) ss += (x - ma) * (x - ma);
  for (double x : b) ss += (x - mb) * (x - mb);
  TTest r;
  r.df = na + nb - 2.0;
  const double pooled = ss / r.df;
  const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  if (!(se > 0.0)) {
    r.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.t = (ma - mb) / se;
  const boost::math::students_t dist(r.df);
  // the |t| form keeps p(a, b) == p(b, a) bit for bit
  r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  return r;
}

ComparisonReport compare(std::span<const sim::EpisodeMetrics> baseline,
                         std::span<const sim::EpisodeMetrics> treatment) {
  ComparisonReport report{baseline.size(), treatment.size(), {}};
  for (std::size_t m = 0; m < sim::kMetricCount; ++m) {
    const auto a = defined(baseline, m), b = defined(treatment, m);
    ComparisonRow row;
    row.metric = std::string(sim::kMetricNames[m]);
    row.baseline_mean = mean(a);
    row.treatment_mean = mean(b);
    if (row.baseline_mean == row.treatment_mean) row.relative_difference = 0.0;
    else if (row.baseline_mean == 0.0) row.relative_difference = std::numeric_limits<double>::quiet_NaN();
    else row.relative_difference = sim::relative_difference(row.treatment_mean, row.baseline_mean);
    row.p_value = (a.size() >= 2 && b.size() >= 2) ? student_t_test(b, a).p
                                                   : std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back(row);
  }
  return report;
}

std::string format_table(const ComparisonReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "baseline trials: %zu, treatment trials: %zu\n", report.baseline_trials,
                report.treatment_trials);
  out += line;
  std::snprintf(line, sizeof line, "%-22s %14s %14s %12s %10s\n", "metric", "baseline", "treatment", "rel.diff %",
                "p-value");
  out += line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-22s %14.6g %14.6g %12.4g %10.4g\n", r.metric.c_str(), r.baseline_mean,
                  r.treatment_mean, r.relative_difference, r.p_value);
    out += line;
  }
  return out;
}

}  // namespace fm::stats
