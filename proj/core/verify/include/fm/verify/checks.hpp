#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Property and oracle suites shared by the test binaries and `fmlab verify`.
namespace fm::verify {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> failures;  // one line per failed assertion
  std::string summary;                // key measured values
  double seconds = 0.0;
};

CheckResult fishery_suite(std::uint64_t seed = 1);
CheckResult market_oracle_suite(std::uint64_t seed = 2);
CheckResult baseline_identities_suite(std::uint64_t seed = 3);
CheckResult rl_numeric_suite(std::uint64_t seed = 4);
CheckResult fairness_stats_suite();

std::vector<CheckResult> run_all(std::uint64_t seed = 0);

}  // namespace fm::verify
