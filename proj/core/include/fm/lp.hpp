#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fm/matrix.hpp"

// Dense two-phase simplex for  max c'x  s.t.  A x <= b,  x >= 0.
// Intended for problems with at most a few hundred variables.
namespace fm::lp {

enum class Status { optimal, infeasible, unbounded };

struct Problem {
  std::vector<double> objective;  // c, length n
  Matrix constraints;             // A, m x n
  std::vector<double> bounds;     // b, length m (any sign)
};

struct Solution {
  Status status = Status::infeasible;
  std::vector<double> primal;  // x
  std::vector<double> dual;    // y >= 0, one per row of A
  double objective = 0.0;
  std::size_t pivots = 0;
};

/// Bland's rule throughout (lowest-index entering and leaving variables), so
/// the result is deterministic and the method cannot cycle.
Solution solve(const Problem& problem);

/// Optimality certificate residuals for a claimed optimal solution.
struct Certificate {
  double primal_infeasibility = 0.0;  // max(A x - b, -x)
  double dual_infeasibility = 0.0;    // max(c - A'y, -y)
  double duality_gap = 0.0;           // |c'x - b'y|
  double worst() const;
};

Certificate certify(const Problem& problem, const Solution& solution);

}  // namespace fm::lp
