#pragma once

#include <doctest.h>

#include "fm/verify/checks.hpp"

inline void expect_passed(const fm::verify::CheckResult& r) {
  MESSAGE(r.name << ": " << r.summary);
  for (const auto& f : r.failures) FAIL_CHECK(f);
  CHECK(r.passed);
}
