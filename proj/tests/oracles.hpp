#pragma once

// Slow, independent reference implementations used to check the library.
// Nothing here shares code paths with the routines under test beyond the
// graph container itself.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "stochmatch/graph.hpp"
#include "stochmatch/lp.hpp"

namespace oracle {

using namespace stochmatch;

// Every ordered selection of distinct incident edges that the constraint
// admits, found by trying all subsets in all orders.
inline std::set<ProbeString> all_strings(const StochasticGraph& g, std::size_t v) {
  const auto& inc = g.online_edges(v);
  std::set<ProbeString> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << inc.size()); ++bits) {
    ProbeString s;
    for (std::size_t i = 0; i < inc.size(); ++i) {
      if ((bits >> i) & 1U) s.push_back(inc[i]);
    }
    std::sort(s.begin(), s.end());
    do {
      if (admits(g.constraint(v), s)) out.insert(s);
    } while (std::next_permutation(s.begin(), s.end()));
  }
  return out;
}

inline double string_value(const StochasticGraph& g, const ProbeString& s) {
  double total = 0.0, alive = 1.0;
  for (EdgeId e : s) {
    total += alive * g.edge(e).p * g.edge(e).w;
    alive *= 1.0 - g.edge(e).p;
  }
  return total;
}

inline double best_star(const StochasticGraph& g, std::size_t v, OfflineMask R) {
  double best = 0.0;
  for (const auto& s : all_strings(g, v)) {
    bool inside = true;
    for (EdgeId e : s) inside = inside && in_mask(R, g.edge(e).u);
    if (inside) best = std::max(best, string_value(g, s));
  }
  return best;
}

// Heaviest matching among `pool` by trying every subset.
inline double max_matching_weight(const StochasticGraph& g, const std::vector<EdgeId>& pool) {
  double best = 0.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << pool.size()); ++bits) {
    std::set<std::size_t> us, vs;
    double w = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < pool.size() && ok; ++i) {
      if (!((bits >> i) & 1U)) continue;
      const Edge& e = g.edge(pool[i]);
      ok = us.insert(e.u).second && vs.insert(e.v).second;
      w += e.w;
    }
    if (ok) best = std::max(best, w);
  }
  return best;
}

// Plain game-tree search over adaptive probers, no memoization. With
// `commit` an active probe with both endpoints free is matched at once;
// without it the value is the best matching among active probes at the end.
inline double adaptive_value(const StochasticGraph& g, bool commit) {
  std::vector<ProbeString> hist(g.num_online());
  std::vector<bool> used_u(g.num_offline()), used_v(g.num_online());
  std::vector<EdgeId> active;
  std::function<double()> rec = [&]() -> double {
    double best = commit ? 0.0 : max_matching_weight(g, active);
    for (std::size_t v = 0; v < g.num_online(); ++v) {
      for (EdgeId e : g.online_edges(v)) {
        if (std::find(hist[v].begin(), hist[v].end(), e) != hist[v].end()) continue;
        hist[v].push_back(e);
        if (admits(g.constraint(v), hist[v])) {
          const Edge& ed = g.edge(e);
          double on = 0.0;
          if (commit) {
            if (!used_u[ed.u] && !used_v[ed.v]) {
              used_u[ed.u] = used_v[ed.v] = true;
              on = ed.w + rec();
              used_u[ed.u] = used_v[ed.v] = false;
            } else {
              on = rec();
            }
          } else {
            active.push_back(e);
            on = rec();
            active.pop_back();
          }
          const double off = rec();
          best = std::max(best, ed.p * on + (1.0 - ed.p) * off);
        }
        hist[v].pop_back();
      }
    }
    return best;
  };
  return rec();
}

// LP optimum by enumerating basic solutions: every choice of n tight
// constraints among rows and x >= 0 is solved and the best feasible one
// kept. Only for a handful of variables; assumes a bounded optimum.
inline std::optional<double> lp_by_vertices(const LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  struct Plane {
    std::vector<double> a;
    double b;
    bool equality;
  };
  std::vector<Plane> planes;
  for (const auto& row : lp.rows()) {
    Plane p{std::vector<double>(n, 0.0), row.rhs, row.rel == Relation::equal};
    for (const auto& t : row.terms) p.a[t.var] += t.coef;
    planes.push_back(p);
  }
  for (std::size_t j = 0; j < n; ++j) {
    Plane p{std::vector<double>(n, 0.0), 0.0, false};
    p.a[j] = -1.0;
    planes.push_back(p);
  }
  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& p : planes) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += p.a[j] * x[j];
      if (lhs > p.b + 1e-9) return false;
      if (p.equality && lhs < p.b - 1e-9) return false;
    }
    return true;
  };
  std::optional<double> best;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> choose = [&](std::size_t start) {
    if (pick.size() == n) {
      for (std::size_t i = 0; i < planes.size(); ++i) {
        if (planes[i].equality && std::find(pick.begin(), pick.end(), i) == pick.end()) return;
      }
      std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) m[r][c] = planes[pick[r]].a[c];
        m[r][n] = planes[pick[r]].b;
      }
      for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
          if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (std::abs(m[piv][c]) < 1e-12) return;
        std::swap(m[piv], m[c]);
        for (std::size_t r = 0; r < n; ++r) {
          if (r == c) continue;
          const double f = m[r][c] / m[c][c];
          for (std::size_t k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
        }
      }
      std::vector<double> x(n);
      for (std::size_t c = 0; c < n; ++c) x[c] = m[c][n] / m[c][c];
      if (!feasible(x)) return;
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += lp.objective()[j] * x[j];
      if (!best || obj > *best) best = obj;
      return;
    }
    for (std::size_t i = start; i < planes.size(); ++i) {
      pick.push_back(i);
      choose(i + 1);
      pick.pop_back();
    }
  };
  choose(0);
  return best;
}

}  // namespace oracle
