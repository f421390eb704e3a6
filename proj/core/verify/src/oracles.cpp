#include "fm/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fm::verify {
namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// shares(b, r): fraction of good r given to buyer b; columns sum to 1
double eg_value(const market::MarketInstance& m, const Matrix& shares) {
  double total = 0.0;
  for (std::size_t b = 0; b < m.budgets.size(); ++b) {
    double u = 0.0;
    for (std::size_t r = 0; r < m.supplies.size(); ++r) u += m.valuations(b, r) * shares(b, r) * m.supplies[r];
    if (!(u > 0.0)) return kMinusInf;
    total += m.budgets[b] * std::log(u);
  }
  return total;
}

// all ways to write k as an ordered sum of `parts` non-negative integers
void compositions(int k, std::size_t parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (cur.size() + 1 == parts) {
    cur.push_back(k);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int i = 0; i <= k; ++i) {
    cur.push_back(i);
    compositions(k - i, parts, cur, out);
    cur.pop_back();
  }
}

// Solves A x = b in place (n x n, row-major). False if singular.
bool gauss_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (std::abs(a[piv * n + c]) < 1e-12) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r * n + c] / a[c * n + c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = 0; c < n; ++c) b[c] /= a[c * n + c];
  return true;
}

}  // namespace

double eg_grid_maximum(const market::MarketInstance& m, int coarse_resolution, double final_step) {
  const std::size_t nb = m.budgets.size(), ng = m.supplies.size();
  std::vector<std::vector<int>> splits;
  std::vector<int> cur;
  compositions(coarse_resolution, nb, cur, splits);

  Matrix shares(nb, ng), best_shares(nb, ng);
  double best = kMinusInf;
  std::vector<std::size_t> idx(ng, 0);
  while (true) {
    for (std::size_t r = 0; r < ng; ++r)
      for (std::size_t b = 0; b < nb; ++b) shares(b, r) = double(splits[idx[r]][b]) / coarse_resolution;
    const double v = eg_value(m, shares);
    if (v > best) {
      best = v;
      best_shares = shares;
    }
    std::size_t r = 0;
    while (r < ng && ++idx[r] == splits.size()) idx[r++] = 0;
    if (r == ng) break;
  }
  if (best == kMinusInf) {
    // every buyer gets an equal share of every good
    for (double& s : best_shares.data()) s = 1.0 / static_cast<double>(nb);
    best = eg_value(m, best_shares);
    if (best == kMinusInf) return best;
  }

  // refine around the best grid point: move mass between two buyers on one good
  shares = best_shares;
  for (double h = 1.0 / coarse_resolution; h >= final_step; h /= 2) {
    for (int sweep = 0; sweep < 200000; ++sweep) {
      bool improved = false;
      for (std::size_t r = 0; r < ng; ++r)
        for (std::size_t from = 0; from < nb; ++from)
          for (std::size_t to = 0; to < nb; ++to) {
            if (from == to) continue;
            const double amount = std::min(h, shares(from, r));
            if (amount <= 0.0) continue;
            shares(from, r) -= amount;
            shares(to, r) += amount;
            const double v = eg_value(m, shares);
            if (v > best) {
              best = v;
              improved = true;
            } else {
              shares(from, r) += amount;
              shares(to, r) -= amount;
            }
          }
      if (!improved) break;
    }
  }
  return best;
}

VertexOptimum welfare_by_vertex_enumeration(const market::MarketInstance& m, std::span<const double> prices) {
  const std::size_t nb = m.budgets.size(), ng = m.supplies.size();
  const std::size_t n = nb * ng;
  // constraint rows g . x <= h: budgets, supplies, then -x_j <= 0
  const std::size_t rows = nb + ng + n;
  Matrix g(rows, n);
  std::vector<double> h(rows, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t r = 0; r < ng; ++r) g(b, b * ng + r) = prices[r];
    h[b] = m.budgets[b];
  }
  for (std::size_t r = 0; r < ng; ++r) {
    for (std::size_t b = 0; b < nb; ++b) g(nb + r, b * ng + r) = 1.0;
    h[nb + r] = m.supplies[r];
  }
  for (std::size_t j = 0; j < n; ++j) g(nb + ng + j, j) = -1.0;

  VertexOptimum best;
  best.objective = kMinusInf;
  std::vector<bool> pick(rows, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n), true);
  std::sort(pick.begin(), pick.end());  // first permutation in lexicographic order
  do {
    std::vector<double> a, rhs;
    for (std::size_t i = 0; i < rows; ++i)
      if (pick[i]) {
        const auto row = g.row(i);
        a.insert(a.end(), row.begin(), row.end());
        rhs.push_back(h[i]);
      }
    if (!gauss_solve(a, rhs, n)) continue;
    bool feasible = true;
    for (std::size_t i = 0; i < rows && feasible; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += g(i, j) * rhs[j];
      feasible = lhs <= h[i] + 1e-9 * (1.0 + std::abs(h[i]));
    }
    if (!feasible) continue;
    ++best.vertices;
    double obj = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < ng; ++r) obj += m.valuations(b, r) * rhs[b * ng + r];
    if (obj > best.objective) {
      best.objective = obj;
      best.allocation = Matrix(nb, ng);
      for (std::size_t j = 0; j < n; ++j) best.allocation.data()[j] = rhs[j];
    }
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double step) {
  std::vector<double> point(x.begin(), x.end()), grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + step;
    const double up = f(point);
    point[i] = keep - step;
    const double down = f(point);
    point[i] = keep;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

StockPath simulate_stock(double equilibrium, double growth, double initial, double effective_effort,
                         std::size_t steps, double depletion_threshold) {
  StockPath path;
  double s = initial;
  path.stocks.push_back(s);
  for (std::size_t t = 0; t < steps; ++t) {
    const double q = std::min(s / (2.0 * equilibrium), 1.0);
    const double harvest = std::min(q * effective_effort, s);
    const double x = s - harvest;
    s = x * std::exp(growth * (1.0 - x / equilibrium));
    path.harvests.push_back(harvest);
    path.stocks.push_back(s);
    if (s < depletion_threshold) {
      path.depleted = true;
      break;
    }
  }
  return path;
}

double equilibrium_stock_formula(double scarcity, std::size_t harvesters, double growth, double max_effort) {
  const double eg = std::exp(growth);
  return scarcity * (eg * max_effort / (2.0 * (eg - 1.0))) * static_cast<double>(harvesters);
}

EffortScan constant_effort_scan(double scarcity, double price, std::size_t steps, std::size_t levels,
                                double max_effort, double growth, double depletion_threshold) {
  EffortScan scan;
  const double s_eq = equilibrium_stock_formula(scarcity, 1, growth, max_effort);
  scan.best_revenue = kMinusInf;
  for (std::size_t k = 0; k < levels; ++k) {
    const double effort = max_effort * static_cast<double>(k) / static_cast<double>(levels - 1);
    const StockPath path = simulate_stock(s_eq, growth, s_eq, effort, steps, depletion_threshold);
    double revenue = 0.0;
    for (double h : path.harvests) revenue += price * h;
    scan.efforts.push_back(effort);
    scan.revenues.push_back(revenue);
    if (revenue > scan.best_revenue) {
      scan.best_revenue = revenue;
      scan.best_effort = effort;
    }
  }
  return scan;
}

market::MarketInstance random_market(std::size_t buyers, std::size_t resources, Rng& rng) {
  market::MarketInstance m{std::vector<double>(buyers), Matrix(buyers, resources), std::vector<double>(resources)};
  for (double& b : m.budgets) b = 1.0 - uniform01(rng);
  for (double& v : m.valuations.data()) {
    do v = uniform01(rng);
    while (v == 0.0);
  }
  for (double& e : m.supplies) e = 1.0 - uniform01(rng);
  return m;
}

}  // namespace fm::verify
