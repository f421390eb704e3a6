#include "fm/metrics_io.hpp"

#include <cmath>
#include <sstream>

#include "fm/error.hpp"
#include "fm/text.hpp"

namespace fm::metrics_io {
namespace {

using text::format_double;

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void check(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write failed for " + path.string());
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "nan"; }

std::size_t column(const Table& t, std::string_view name, const std::string& context) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw IoError(context + ": missing column '" + std::string(name) + "'");
}

}  // namespace

void write_table(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  write_line(out, table.header);
  for (const auto& row : table.rows) write_line(out, row);
  out.close();
  check(out, path);
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : text::split(line, ',')) cells.emplace_back(c);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " cells, got " + std::to_string(cells.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw IoError(path.string() + ": missing header row");
  return t;
}

std::vector<std::string> episode_header() {
  std::vector<std::string> h{"episode"};
  for (auto name : sim::kMetricNames) h.emplace_back(name);
  return h;
}

std::vector<std::string> episode_row(std::size_t episode, const sim::EpisodeMetrics& m) {
  std::vector<std::string> r{std::to_string(episode)};
  for (double v : m.values) r.push_back(format_double(v));
  return r;
}

std::vector<sim::EpisodeMetrics> parse_episodes(const Table& table) {
  std::vector<std::size_t> cols;
  for (auto name : sim::kMetricNames) cols.push_back(column(table, name, "episode table"));
  std::vector<sim::EpisodeMetrics> out;
  for (const auto& row : table.rows) {
    sim::EpisodeMetrics m;
    for (std::size_t i = 0; i < sim::kMetricCount; ++i) m.values[i] = text::parse_double(row[cols[i]]);
    out.push_back(m);
  }
  return out;
}

void write_episodes(const std::filesystem::path& path, std::span<const sim::EpisodeMetrics> episodes) {
  Table t{episode_header(), {}};
  for (std::size_t e = 0; e < episodes.size(); ++e) t.rows.push_back(episode_row(e, episodes[e]));
  write_table(path, t);
}

std::vector<sim::EpisodeMetrics> read_episodes(const std::filesystem::path& path) {
  try {
    return parse_episodes(read_table(path));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> step_header(std::size_t n_h, std::size_t n_r, std::size_t n_b) {
  std::vector<std::string> h{"episode", "t"};
  const auto per = [&](std::string_view prefix, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) h.push_back(std::string(prefix) + "_" + std::to_string(i));
  };
  per("stock_before", n_r);
  per("stock_after", n_r);
  per("supply", n_r);
  per("price", n_r);
  per("reference_price", n_r);
  for (std::size_t n = 0; n < n_h; ++n)
    for (std::size_t r = 0; r < n_r; ++r) h.push_back("effort_" + std::to_string(n) + "_" + std::to_string(r));
  per("revenue", n_h);
  per("budget", n_b);
  per("utility", n_b);
  for (auto name : {"wasted_fraction", "leftover_budget", "reward", "reward_harvesters", "reward_buyers",
                    "reward_sustainability", "reward_fairness", "reward_price_gap", "market_skipped", "depleted",
                    "terminal"})
    h.emplace_back(name);
  return h;
}

std::vector<std::string> step_row(std::size_t episode, const sim::StepRecord& s) {
  std::vector<std::string> r{std::to_string(episode), std::to_string(s.time_step)};
  const auto add = [&](std::span<const double> v) {
    for (double x : v) r.push_back(format_double(x));
  };
  add(s.stocks_before);
  add(s.stocks_after);
  add(s.supplies);
  add(s.prices);
  if (s.reference_prices.empty()) {
    for (std::size_t i = 0; i < s.prices.size(); ++i) r.push_back("nan");
  } else {
    add(s.reference_prices);
  }
  add(s.efforts.data());
  add(s.harvester_revenues);
  add(s.budgets);
  add(s.buyer_utilities);
  r.push_back(opt(s.wasted_fraction));
  r.push_back(opt(s.leftover_budget));
  for (double v : {s.reward.total, s.reward.harvester_welfare, s.reward.buyer_welfare, s.reward.sustainability,
                   s.reward.fairness, s.reward.price_gap})
    r.push_back(format_double(v));
  r.push_back(s.market_skipped ? "1" : "0");
  r.push_back(s.depleted ? "1" : "0");
  r.push_back(s.terminal ? "1" : "0");
  return r;
}

TrialWriter::TrialWriter(const std::filesystem::path& dir, const sim::ScenarioConfig& config) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  episodes_ = open_out(dir / "episodes.csv");
  steps_ = open_out(dir / "steps.csv");
  write_line(episodes_, episode_header());
  write_line(steps_, step_header(config.harvesters, config.resources, config.buyers));
}

void TrialWriter::write(std::size_t episode, const sim::EpisodeLog& log) {
  write_line(episodes_, episode_row(episode, log.metrics));
  for (const auto& s : log.steps) write_line(steps_, step_row(episode, s));
  check(episodes_, dir_ / "episodes.csv");
  check(steps_, dir_ / "steps.csv");
}

void TrialWriter::close() {
  episodes_.close();
  steps_.close();
  check(episodes_, dir_ / "episodes.csv");
  check(steps_, dir_ / "steps.csv");
}

void write_summary(const std::filesystem::path& path, std::span<const sim::TrialResult> trials) {
  Table t;
  t.header = episode_header();
  t.header[0] = "trial";
  t.header.push_back("depletion_frequency");
  t.header.push_back("min_length");
  for (const auto& tr : trials) {
    auto row = episode_row(tr.trial, tr.summary);
    row.push_back(format_double(tr.depletion_frequency));
    row.push_back(format_double(tr.min_length));
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

std::vector<sim::EpisodeMetrics> read_summary(const std::filesystem::path& path) {
  try {
    return parse_episodes(read_table(path));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Table plot_data(std::span<const std::vector<sim::EpisodeMetrics>> trials) {
  Table t;
  t.header.push_back("episode");
  for (auto name : sim::kMetricNames) {
    t.header.push_back(std::string(name) + "_mean");
    t.header.push_back(std::string(name) + "_std");
  }
  if (trials.empty()) return t;
  const std::size_t episodes = trials.front().size();
  for (const auto& tr : trials)
    if (tr.size() != episodes) throw IoError("plot data: trials have different episode counts");
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<std::string> row{std::to_string(e)};
    for (std::size_t m = 0; m < sim::kMetricCount; ++m) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& tr : trials)
        if (!std::isnan(tr[e].values[m])) {
          sum += tr[e].values[m];
          ++n;
        }
      const double mean = n ? sum / static_cast<double>(n) : std::nan("");
      double ss = 0.0;
      for (const auto& tr : trials)
        if (!std::isnan(tr[e].values[m])) ss += (tr[e].values[m] - mean) * (tr[e].values[m] - mean);
      const double sd = n == 0 ? std::nan("") : n == 1 ? 0.0 : std::sqrt(ss / static_cast<double>(n - 1));
      row.push_back(format_double(mean));
      row.push_back(format_double(sd));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::filesystem::path trial_dir(const std::filesystem::path& run_dir, std::size_t trial) {
  return run_dir / ("trial_" + std::to_string(trial));
}

}  // namespace fm::metrics_io
