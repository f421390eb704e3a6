#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fm/error.hpp"
#include "fm/metrics_io.hpp"

using namespace fm;
using namespace fm::sim;

namespace {

std::filesystem::path scratch(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

EpisodeMetrics sample_metrics(double base) {
  EpisodeMetrics m;
  for (std::size_t i = 0; i < kMetricCount; ++i) m.values[i] = base / 3.0 + static_cast<double>(i) * 1e-7;
  m[Metric::price_gap] = std::nan("");
  return m;
}

bool same(const EpisodeMetrics& a, const EpisodeMetrics& b) {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (std::isnan(a.values[i]) != std::isnan(b.values[i])) return false;
    if (!std::isnan(a.values[i]) && a.values[i] != b.values[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("episode tables round trip exactly") {
  const auto dir = scratch("fm_io_episodes");
  const std::vector<EpisodeMetrics> eps{sample_metrics(1.0), sample_metrics(-2.0 / 7.0)};
  metrics_io::write_episodes(dir / "e.csv", eps);
  const auto back = metrics_io::read_episodes(dir / "e.csv");
  REQUIRE(back.size() == 2);
  CHECK(same(back[0], eps[0]));
  CHECK(same(back[1], eps[1]));

  metrics_io::write_episodes(dir / "empty.csv", std::vector<EpisodeMetrics>{});
  const auto table = metrics_io::read_table(dir / "empty.csv");
  CHECK(table.header == metrics_io::episode_header());
  CHECK(table.rows.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("table errors name the file") {
  const auto missing = std::filesystem::temp_directory_path() / "fm_no_such_dir" / "x.csv";
  try {
    metrics_io::read_table(missing);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("x.csv") != std::string::npos);
  }
}

TEST_CASE("step table layout") {
  const auto h = metrics_io::step_header(2, 3, 4);
  CHECK(h[0] == "episode");
  CHECK(h[1] == "t");
  // 5 per-resource blocks, efforts, revenues, budgets, utilities, 8 scalars, 3 flags
  CHECK(h.size() == 2 + 5 * 3 + 2 * 3 + 2 + 4 + 4 + 8 + 3);
  CHECK(h.back() == "terminal");

  StepRecord s;
  s.time_step = 1;
  s.efforts = Matrix(2, 3, 0.1);
  s.supplies = s.stocks_before = s.stocks_after = s.prices = {1, 2, 3};
  s.budgets = s.buyer_utilities = {0.1, 0.2, 0.3, 0.4};
  s.harvester_revenues = {5, 6};
  s.market_skipped = true;
  const auto row = metrics_io::step_row(0, s);
  REQUIRE(row.size() == h.size());
  CHECK(row[2 + 4 * 3] == "nan");  // reference price not computed
}

TEST_CASE("trial writer leaves header-only files") {
  const auto dir = scratch("fm_io_writer");
  ScenarioConfig c;
  c.harvesters = 1;
  c.resources = 1;
  c.buyers = 1;
  {
    metrics_io::TrialWriter w(dir, c);
    w.close();
  }
  CHECK(metrics_io::read_table(dir / "episodes.csv").rows.empty());
  CHECK(metrics_io::read_table(dir / "steps.csv").header == metrics_io::step_header(1, 1, 1));
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot data") {
  std::vector<std::vector<EpisodeMetrics>> trials(1, {sample_metrics(1.0), sample_metrics(2.0)});
  auto t = metrics_io::plot_data(trials);
  CHECK(t.rows.size() == 2);
  CHECK(t.header[0] == "episode");
  CHECK(t.header.size() == 1 + 2 * kMetricCount);
  CHECK(t.header[1] == "length_mean");
  CHECK(t.header[2] == "length_std");
  CHECK(t.rows[0][2] == "0");

  trials.push_back({sample_metrics(3.0), sample_metrics(4.0)});
  t = metrics_io::plot_data(trials);
  CHECK(std::stod(t.rows[0][1]) == doctest::Approx(2.0 / 3.0));
  CHECK(std::stod(t.rows[0][2]) == doctest::Approx(std::sqrt(2.0) / 3.0));
  trials[1].pop_back();
  CHECK_THROWS(metrics_io::plot_data(trials));
}

TEST_CASE("summary round trip") {
  const auto dir = scratch("fm_io_summary");
  std::vector<TrialResult> trials(2);
  trials[0].summary = sample_metrics(5.0);
  trials[1].trial = 1;
  trials[1].summary = sample_metrics(6.0);
  trials[1].depletion_frequency = 0.25;
  metrics_io::write_summary(dir / "summary.csv", trials);
  const auto back = metrics_io::read_summary(dir / "summary.csv");
  REQUIRE(back.size() == 2);
  CHECK(same(back[1], trials[1].summary));
  const auto table = metrics_io::read_table(dir / "summary.csv");
  CHECK(table.header.front() == "trial");
  CHECK(table.header.back() == "min_length");
  std::filesystem::remove_all(dir);
}
