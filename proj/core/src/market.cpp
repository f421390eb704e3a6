#include "fm/market.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "fm/error.hpp"
#include "fm/lp.hpp"

namespace fm::market {
namespace {

// Sub-market restricted to goods with positive supply that someone values and
// to buyers that value at least one of those goods.
struct Reduced {
  std::vector<std::size_t> buyers;  // indices into the full instance
  std::vector<std::size_t> goods;
  std::vector<double> budgets;
  Matrix valuations;
  std::vector<double> supplies;
};

Reduced reduce(const MarketInstance& inst) {
  const std::size_t nb = inst.budgets.size();
  const std::size_t ng = inst.supplies.size();
  Reduced red;
  for (std::size_t r = 0; r < ng; ++r) {
    if (!(inst.supplies[r] > 0.0)) continue;
    bool valued = false;
    for (std::size_t b = 0; b < nb; ++b) valued = valued || inst.valuations(b, r) > 0.0;
    if (valued) red.goods.push_back(r);
  }
  for (std::size_t b = 0; b < nb; ++b) {
    bool wants = false;
    for (std::size_t r : red.goods) wants = wants || inst.valuations(b, r) > 0.0;
    if (wants) red.buyers.push_back(b);
  }
  red.valuations = Matrix(red.buyers.size(), red.goods.size());
  for (std::size_t i = 0; i < red.buyers.size(); ++i) {
    red.budgets.push_back(inst.budgets[red.buyers[i]]);
    for (std::size_t j = 0; j < red.goods.size(); ++j)
      red.valuations(i, j) = inst.valuations(red.buyers[i], red.goods[j]);
  }
  for (std::size_t r : red.goods) red.supplies.push_back(inst.supplies[r]);
  return red;
}

// Edmonds-Karp on a dense capacity matrix. Returns the flow matrix.
Matrix max_flow(const Matrix& capacity, std::size_t source, std::size_t sink, double eps) {
  const std::size_t n = capacity.rows();
  Matrix flow(n, n);
  std::vector<std::size_t> parent(n);
  for (std::size_t round = 0; round < 10 * n * n; ++round) {
    std::fill(parent.begin(), parent.end(), n);
    parent[source] = source;
    std::deque<std::size_t> queue{source};
    while (!queue.empty() && parent[sink] == n) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v)
        if (parent[v] == n && capacity(u, v) - flow(u, v) > eps) {
          parent[v] = u;
          queue.push_back(v);
        }
    }
    if (parent[sink] == n) break;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t v = sink; v != source; v = parent[v])
      push = std::min(push, capacity(parent[v], v) - flow(parent[v], v));
    for (std::size_t v = sink; v != source; v = parent[v]) {
      flow(parent[v], v) += push;
      flow(v, parent[v]) -= push;
    }
  }
  return flow;
}

struct Candidate {
  std::vector<double> prices;
  Matrix allocation;
};

// Recovers exact prices from a candidate spending forest (edge(b, r) != 0)
// and checks that a market-clearing, budget-exhausting allocation exists on
// the maximum bang-per-buck edges.
std::optional<Candidate> recover_from_support(const Reduced& red, const Matrix& edge) {
  const std::size_t nb = red.buyers.size();
  const std::size_t ng = red.goods.size();

  std::vector<double> relative(ng, 0.0);
  std::vector<int> good_comp(ng, -1), buyer_comp(nb, -1);
  std::vector<double> comp_budget, comp_value;
  for (std::size_t root = 0; root < ng; ++root) {
    if (good_comp[root] >= 0) continue;
    const int c = static_cast<int>(comp_budget.size());
    comp_budget.push_back(0.0);
    comp_value.push_back(0.0);
    relative[root] = 1.0;
    good_comp[root] = c;
    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
      const std::size_t g = queue.front();
      queue.pop_front();
      comp_value[c] += relative[g] * red.supplies[g];
      for (std::size_t b = 0; b < nb; ++b) {
        if (edge(b, g) == 0.0 || buyer_comp[b] >= 0) continue;
        buyer_comp[b] = c;
        comp_budget[c] += red.budgets[b];
        for (std::size_t j = 0; j < ng; ++j)
          if (edge(b, j) != 0.0 && good_comp[j] < 0) {
            good_comp[j] = c;
            relative[j] = relative[g] * red.valuations(b, j) / red.valuations(b, g);
            queue.push_back(j);
          }
      }
    }
  }
  for (std::size_t b = 0; b < nb; ++b)
    if (buyer_comp[b] < 0) return std::nullopt;
  for (std::size_t c = 0; c < comp_budget.size(); ++c)
    if (comp_budget[c] <= 0.0) return std::nullopt;

  Candidate cand{std::vector<double>(ng), Matrix(nb, ng)};
  for (std::size_t r = 0; r < ng; ++r) {
    const auto c = static_cast<std::size_t>(good_comp[r]);
    cand.prices[r] = relative[r] * comp_budget[c] / comp_value[c];
    if (!(cand.prices[r] > 0.0) || !std::isfinite(cand.prices[r])) return std::nullopt;
  }

  // Flow network: source -> buyers (budget) -> MBB goods -> sink (p_r e_r).
  const std::size_t n = nb + ng + 2;
  const std::size_t source = nb + ng, sink = nb + ng + 1;
  Matrix cap(n, n);
  double total_budget = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    cap(source, b) = red.budgets[b];
    total_budget += red.budgets[b];
    double best = 0.0;
    for (std::size_t r = 0; r < ng; ++r) best = std::max(best, red.valuations(b, r) / cand.prices[r]);
    for (std::size_t r = 0; r < ng; ++r)
      if (red.valuations(b, r) > 0.0 && red.valuations(b, r) / cand.prices[r] >= best * (1.0 - 1e-11))
        cap(b, nb + r) = std::numeric_limits<double>::infinity();
  }
  for (std::size_t r = 0; r < ng; ++r) cap(nb + r, sink) = cand.prices[r] * red.supplies[r];

  const Matrix flow = max_flow(cap, source, sink, 1e-15 * total_budget);
  double delivered = 0.0;
  for (std::size_t b = 0; b < nb; ++b) delivered += flow(source, b);
  if (delivered < total_budget * (1.0 - 1e-11)) return std::nullopt;

  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < ng; ++r)
      if (flow(b, nb + r) > 0.0) cand.allocation(b, r) = flow(b, nb + r) / cand.prices[r];
  return cand;
}

// Candidate supports from the current bids: the spanning forest of largest
// shares, then the same forest with its weakest edges removed one at
// a time. Ties at equilibrium (an MBB edge carrying no money) make the raw
// support cyclic and decay only slowly under the dynamics; the forest avoids
// them.
std::optional<Candidate> recover_from_bids(const Reduced& red, const Matrix& bids, bool try_swaps) {
  const std::size_t nb = red.buyers.size();
  const std::size_t ng = red.goods.size();
  struct Edge {
    double share;
    std::size_t b, r;
  };
  std::vector<double> revenue(ng, 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < ng; ++r) revenue[r] += bids(b, r);
  // an edge matters if it is a large part of the buyer's spending or of the
  // good's revenue; the latter keeps goods with tiny supplies attached
  std::vector<Edge> edges;
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < ng; ++r) {
      const double share = std::max(bids(b, r) / red.budgets[b], revenue[r] > 0.0 ? bids(b, r) / revenue[r] : 0.0);
      if (red.valuations(b, r) > 0.0 && share > 0.0) edges.push_back({share, b, r});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.share > y.share; });

  // Kruskal over buyers 0..nb-1 and goods nb..nb+ng-1
  std::vector<std::size_t> parent(nb + ng);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  const auto root = [&parent](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<Edge> forest;
  for (const Edge& e : edges) {
    const std::size_t a = root(e.b), c = root(nb + e.r);
    if (a == c) continue;
    parent[a] = c;
    forest.push_back(e);
  }

  std::vector<std::size_t> degree(nb, 0);
  for (const Edge& e : forest) ++degree[e.b];
  Matrix edge(nb, ng);
  for (const Edge& e : forest) edge(e.b, e.r) = 1.0;
  const Matrix full = edge;
  // forest is sorted by decreasing share; peel from the back
  for (std::size_t keep = forest.size(); keep > 0; --keep) {
    if (auto cand = recover_from_support(red, edge)) return cand;
    const Edge& weakest = forest[keep - 1];
    if (--degree[weakest.b] == 0) break;
    edge(weakest.b, weakest.r) = 0.0;
  }
  if (!try_swaps) return std::nullopt;

  // Near-ties can leave the wrong edge of a cycle in the forest: swap each
  // remaining significant edge in for each forest edge on the cycle it closes.
  const std::size_t nodes = nb + ng;
  for (const Edge& extra : edges) {
    if (extra.share < 1e-6) break;
    if (full(extra.b, extra.r) != 0.0) continue;
    // path in the forest from buyer extra.b to good extra.r
    std::vector<std::size_t> from(nodes, nodes);
    std::deque<std::size_t> queue{extra.b};
    from[extra.b] = extra.b;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t w = 0; w < nodes; ++w) {
        if (from[w] != nodes) continue;
        const bool linked = u < nb ? (w >= nb && full(u, w - nb) != 0.0) : (w < nb && full(w, u - nb) != 0.0);
        if (!linked) continue;
        from[w] = u;
        queue.push_back(w);
      }
    }
    const std::size_t target = nb + extra.r;
    if (from[target] == nodes) continue;
    for (std::size_t w = target; w != extra.b; w = from[w]) {
      const std::size_t u = from[w];
      const std::size_t b = u < nb ? u : w, r = (u < nb ? w : u) - nb;
      Matrix swapped = full;
      swapped(b, r) = 0.0;
      swapped(extra.b, extra.r) = 1.0;
      if (auto cand = recover_from_support(red, swapped)) return cand;
    }
  }
  return std::nullopt;
}

MarketOutcome expand(const MarketInstance& inst, const Reduced& red, const std::vector<double>& prices,
                     const Matrix& allocation) {
  MarketOutcome out{std::vector<double>(inst.supplies.size(), 0.0),
                    Matrix(inst.budgets.size(), inst.supplies.size()), {}};
  for (std::size_t j = 0; j < red.goods.size(); ++j) out.prices[red.goods[j]] = prices[j];
  for (std::size_t i = 0; i < red.buyers.size(); ++i)
    for (std::size_t j = 0; j < red.goods.size(); ++j) out.allocation(red.buyers[i], red.goods[j]) = allocation(i, j);
  out.buyer_utilities = utilities(out.allocation, inst.valuations);
  return out;
}

bool attempt_due(std::size_t iteration) {
  if (iteration < 1024) return iteration == 0 || (iteration >= 4 && (iteration & (iteration - 1)) == 0);
  return iteration % 1024 == 0;
}

}  // namespace

void validate(const MarketInstance& instance) {
  const std::size_t nb = instance.budgets.size();
  const std::size_t ng = instance.supplies.size();
  if (instance.valuations.rows() != nb || instance.valuations.cols() != ng)
    throw ConfigError("valuation matrix must be " + std::to_string(nb) + "x" + std::to_string(ng));
  for (double b : instance.budgets)
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("budgets must be positive and finite");
  for (double v : instance.valuations.data())
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("valuations must be non-negative and finite");
  for (double e : instance.supplies)
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("supplies must be non-negative and finite");
}

std::vector<double> utilities(const Matrix& allocation, const Matrix& valuations) {
  std::vector<double> u(allocation.rows(), 0.0);
  for (std::size_t b = 0; b < allocation.rows(); ++b)
    for (std::size_t r = 0; r < allocation.cols(); ++r) u[b] += valuations(b, r) * allocation(b, r);
  return u;
}

MarketOutcome solve_equilibrium(const MarketInstance& instance, const SolverOptions& options) {
  validate(instance);
  const Reduced red = reduce(instance);
  const std::size_t nb = red.buyers.size();
  const std::size_t ng = red.goods.size();
  if (nb == 0 || ng == 0) return expand(instance, red, {}, Matrix(nb, ng));

  // Initial bids proportional to valuations.
  Matrix bids(nb, ng);
  for (std::size_t b = 0; b < nb; ++b) {
    double total = 0.0;
    for (std::size_t r = 0; r < ng; ++r) total += red.valuations(b, r);
    for (std::size_t r = 0; r < ng; ++r) bids(b, r) = red.budgets[b] * red.valuations(b, r) / total;
  }

  std::vector<double> revenue(ng), prices(ng);
  Matrix alloc(nb, ng);
  std::vector<double> util(nb);
  double change = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it <= options.max_iterations; ++it) {
    if (attempt_due(it) || change < options.tolerance) {
      if (auto cand = recover_from_bids(red, bids, it >= 256 || change < options.tolerance)) return expand(instance, red, cand->prices, cand->allocation);
    }

    std::fill(revenue.begin(), revenue.end(), 0.0);
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < ng; ++r) revenue[r] += bids(b, r);
    std::fill(util.begin(), util.end(), 0.0);
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < ng; ++r) {
        alloc(b, r) = revenue[r] > 0.0 ? bids(b, r) * red.supplies[r] / revenue[r] : 0.0;
        util[b] += red.valuations(b, r) * alloc(b, r);
      }

    if (change < options.tolerance) {
      for (std::size_t r = 0; r < ng; ++r) prices[r] = revenue[r] / red.supplies[r];
      return expand(instance, red, prices, alloc);
    }

    // bid changes relative to the good's revenue, so goods with tiny
    // supplies converge as tightly as the rest
    change = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < ng; ++r) {
        const double next = red.budgets[b] * red.valuations(b, r) * alloc(b, r) / util[b];
        if (revenue[r] > 0.0) change = std::max(change, std::abs(next - bids(b, r)) / revenue[r]);
        bids(b, r) = next;
      }
  }
  throw SolverError("proportional response did not converge in " + std::to_string(options.max_iterations) +
                        " iterations",
                    change);
}

std::optional<double> eg_objective(const Matrix& allocation, const MarketInstance& instance) {
  const std::vector<double> u = utilities(allocation, instance.valuations);
  double total = 0.0;
  for (std::size_t b = 0; b < u.size(); ++b) {
    if (!(u[b] > 0.0)) return std::nullopt;
    total += instance.budgets[b] * std::log(u[b]);
  }
  return total;
}

MarketOutcome allocate_at_prices(const MarketInstance& instance, std::span<const double> prices) {
  validate(instance);
  const std::size_t nb = instance.budgets.size();
  const std::size_t ng = instance.supplies.size();
  if (prices.size() != ng) throw ConfigError("price vector does not match good count");
  for (double p : prices)
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("prices must be non-negative and finite");

  // Variable x_br lives at column b*R + r. Rows: budgets first, then supplies.
  lp::Problem lp{std::vector<double>(nb * ng), Matrix(nb + ng, nb * ng), std::vector<double>(nb + ng)};
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < ng; ++r) {
      const std::size_t col = b * ng + r;
      lp.objective[col] = instance.valuations(b, r);
      lp.constraints(b, col) = prices[r];
      lp.constraints(nb + r, col) = 1.0;
    }
  for (std::size_t b = 0; b < nb; ++b) lp.bounds[b] = instance.budgets[b];
  for (std::size_t r = 0; r < ng; ++r) lp.bounds[nb + r] = instance.supplies[r];

  const lp::Solution sol = lp::solve(lp);
  if (sol.status != lp::Status::optimal) throw SolverError("allocation LP is not optimal", 0.0);

  MarketOutcome out{std::vector<double>(prices.begin(), prices.end()), Matrix(nb, ng), {}};
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < ng; ++r) out.allocation(b, r) = sol.primal[b * ng + r];
  out.buyer_utilities = utilities(out.allocation, instance.valuations);
  return out;
}

double EquilibriumResiduals::worst() const { return std::max({clearance, budget, bang_per_buck}); }

EquilibriumResiduals equilibrium_residuals(const MarketInstance& instance, const MarketOutcome& outcome,
                                           double support_tolerance) {
  const std::size_t nb = instance.budgets.size();
  const std::size_t ng = instance.supplies.size();
  EquilibriumResiduals res;
  for (std::size_t r = 0; r < ng; ++r) {
    if (!(outcome.prices[r] > 0.0)) continue;
    double sold = 0.0;
    for (std::size_t b = 0; b < nb; ++b) sold += outcome.allocation(b, r);
    res.clearance = std::max(res.clearance, std::abs(sold - instance.supplies[r]));
  }
  for (std::size_t b = 0; b < nb; ++b) {
    double best = 0.0;
    bool participates = false;
    for (std::size_t r = 0; r < ng; ++r) {
      if (!(outcome.prices[r] > 0.0)) continue;
      if (instance.valuations(b, r) > 0.0) participates = true;
      best = std::max(best, instance.valuations(b, r) / outcome.prices[r]);
    }
    if (!participates) continue;
    double spent = 0.0;
    for (std::size_t r = 0; r < ng; ++r) {
      spent += outcome.prices[r] * outcome.allocation(b, r);
      if (outcome.allocation(b, r) > support_tolerance && outcome.prices[r] > 0.0)
        res.bang_per_buck = std::max(res.bang_per_buck, best - instance.valuations(b, r) / outcome.prices[r]);
    }
    res.budget = std::max(res.budget, std::abs(spent - instance.budgets[b]));
  }
  return res;
}

}  // namespace fm::market
