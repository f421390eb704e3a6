#include "fm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fm/error.hpp"

namespace fm::lp {
namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;

// Tableau with explicit basis bookkeeping. Columns: n structural, m slack,
// then one artificial per row whose right-hand side was negative.
class Tableau {
 public:
  Tableau(const Problem& p) : m_(p.constraints.rows()), n_(p.constraints.cols()) {
    sign_.assign(m_, 1.0);
    std::size_t artificials = 0;
    for (std::size_t i = 0; i < m_; ++i)
      if (p.bounds[i] < 0.0) {
        sign_[i] = -1.0;
        ++artificials;
      }
    cols_ = n_ + m_ + artificials;
    t_ = Matrix(m_, cols_ + 1);
    basis_.resize(m_);
    std::size_t next_art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) t_(i, j) = sign_[i] * p.constraints(i, j);
      t_(i, n_ + i) = sign_[i];
      t_(i, cols_) = sign_[i] * p.bounds[i];
      if (sign_[i] < 0.0) {
        t_(i, next_art) = 1.0;
        basis_[i] = next_art++;
      } else {
        basis_[i] = n_ + i;
      }
    }
    artificial_begin_ = n_ + m_;
  }

  // Runs the simplex on the given column costs. Columns flagged in `blocked`
  // may not enter. Returns false when unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<bool>& blocked, std::size_t& pivots) {
    for (;;) {
      std::vector<double> reduced = reduced_costs(cost);
      std::size_t entering = cols_;
      for (std::size_t j = 0; j < cols_; ++j)
        if (!blocked[j] && reduced[j] > kCostEps) {
          entering = j;
          break;
        }
      if (entering == cols_) return true;

      std::size_t leaving = m_;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t_(i, entering);
        if (a <= kPivotEps) continue;
        const double ratio = t_(i, cols_) / a;
        if (ratio < best_ratio - 1e-14 ||
            (std::abs(ratio - best_ratio) <= 1e-14 && leaving < m_ && basis_[i] < basis_[leaving])) {
          best_ratio = ratio;
          leaving = i;
        }
      }
      if (leaving == m_) return false;
      pivot(leaving, entering);
      ++pivots;
      if (pivots > 50000) throw SolverError("simplex pivot limit exceeded", static_cast<double>(pivots));
    }
  }

  std::vector<double> reduced_costs(const std::vector<double>& cost) const {
    std::vector<double> r(cost);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) r[j] -= cb * t_(i, j);
    }
    return r;
  }

  double value(const std::vector<double>& cost) const {
    double v = 0.0;
    for (std::size_t i = 0; i < m_; ++i) v += cost[basis_[i]] * t_(i, cols_);
    return v;
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t_(row, col);
    for (std::size_t j = 0; j <= cols_; ++j) t_(row, j) /= p;
    t_(row, col) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) t_(i, j) -= f * t_(row, j);
      t_(i, col) = 0.0;
    }
    basis_[row] = col;
  }

  // After phase one, pivots zero-level artificials out of the basis where a
  // structural or slack column allows it. Rows that cannot be cleared are
  // redundant and keep a harmless zero-valued artificial.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < artificial_begin_) continue;
      for (std::size_t j = 0; j < artificial_begin_; ++j)
        if (std::abs(t_(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t structural() const { return n_; }
  std::size_t columns() const { return cols_; }
  std::size_t artificial_begin() const { return artificial_begin_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  double rhs(std::size_t i) const { return t_(i, cols_); }

 private:
  std::size_t m_, n_, cols_ = 0, artificial_begin_ = 0;
  std::vector<double> sign_;
  std::vector<std::size_t> basis_;
  Matrix t_;
};

}  // namespace

Solution solve(const Problem& problem) {
  const std::size_t m = problem.constraints.rows();
  const std::size_t n = problem.constraints.cols();
  if (problem.objective.size() != n || problem.bounds.size() != m)
    throw ConfigError("LP dimensions are inconsistent");

  Tableau tab(problem);
  Solution sol;
  std::vector<bool> blocked(tab.columns(), false);

  if (tab.artificial_begin() < tab.columns()) {
    std::vector<double> phase1(tab.columns(), 0.0);
    for (std::size_t j = tab.artificial_begin(); j < tab.columns(); ++j) phase1[j] = -1.0;
    tab.optimize(phase1, blocked, sol.pivots);
    if (tab.value(phase1) < -1e-9) {
      sol.status = Status::infeasible;
      return sol;
    }
    tab.expel_artificials();
    for (std::size_t j = tab.artificial_begin(); j < tab.columns(); ++j) blocked[j] = true;
  }

  std::vector<double> cost(tab.columns(), 0.0);
  std::copy(problem.objective.begin(), problem.objective.end(), cost.begin());
  if (!tab.optimize(cost, blocked, sol.pivots)) {
    sol.status = Status::unbounded;
    return sol;
  }

  sol.status = Status::optimal;
  sol.primal.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis()[i] < n) sol.primal[tab.basis()[i]] = tab.rhs(i);
  for (double& x : sol.primal) x = std::max(x, 0.0);

  // Dual of row i is minus the reduced cost of its slack column; the row
  // sign flip cancels because the slack coefficient was flipped with it.
  const std::vector<double> reduced = tab.reduced_costs(cost);
  sol.dual.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) sol.dual[i] = std::max(-reduced[n + i], 0.0);

  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += problem.objective[j] * sol.primal[j];
  return sol;
}

double Certificate::worst() const { return std::max({primal_infeasibility, dual_infeasibility, duality_gap}); }

Certificate certify(const Problem& problem, const Solution& solution) {
  const std::size_t m = problem.constraints.rows();
  const std::size_t n = problem.constraints.cols();
  Certificate c;
  for (std::size_t j = 0; j < n; ++j) c.primal_infeasibility = std::max(c.primal_infeasibility, -solution.primal[j]);
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) lhs += problem.constraints(i, j) * solution.primal[j];
    c.primal_infeasibility = std::max(c.primal_infeasibility, lhs - problem.bounds[i]);
    c.dual_infeasibility = std::max(c.dual_infeasibility, -solution.dual[i]);
    dual_obj += problem.bounds[i] * solution.dual[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    double aty = 0.0;
    for (std::size_t i = 0; i < m; ++i) aty += problem.constraints(i, j) * solution.dual[i];
    c.dual_infeasibility = std::max(c.dual_infeasibility, problem.objective[j] - aty);
  }
  double primal_obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) primal_obj += problem.objective[j] * solution.primal[j];
  c.duality_gap = std::abs(primal_obj - dual_obj);
  return c;
}

}  // namespace fm::lp
