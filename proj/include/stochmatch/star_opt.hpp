#pragma once

// Optimal probing of a single online vertex against a free offline set R,
// ranking-based probing, and rankability checks.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/probing.hpp"

namespace stochmatch {

/// Values closer than this count as ties when picking among probe orders.
inline constexpr double kTieTolerance = 1e-12;

struct StarPolicy {
  ProbeString probe_string;
  double value = 0.0;
};

struct Ranking {
  std::vector<EdgeId> order;
  friend bool operator==(const Ranking&, const Ranking&) = default;
};

namespace detail {

/// Edges at v whose offline endpoint is in R, by nonincreasing weight with
/// ties broken by edge id.
inline std::vector<EdgeId> weight_sorted_edges(const StochasticGraph& g, std::size_t v,
                                               OfflineMask R) {
  std::vector<EdgeId> out;
  for (EdgeId e : g.online_edges(v)) {
    if (in_mask(R, g.edge(e).u)) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](EdgeId a, EdgeId b) { return g.edge(a).w > g.edge(b).w; });
  return out;
}

// Recursion over weight-sorted strings: the best continuation after choosing
// the edge set `chosen` (positions into `sorted`) only depends on that set,
// since the next edge must come later in the order.
class SortedStarDp {
 public:
  SortedStarDp(const StochasticGraph& g, const ConstraintSpec& c, std::vector<EdgeId> sorted)
      : g_(g), c_(c), sorted_(std::move(sorted)) {
    if (sorted_.size() > 63) throw CapExceeded("dp_opt: more than 63 candidate edges");
    if (const auto* p = std::get_if<Patience>(&c_)) patience_ = p->limit;
  }

  StarPolicy solve() {
    StarPolicy out;
    out.value = best(0, 0, 0).value;
    std::uint64_t chosen = 0;
    std::size_t start = 0, count = 0;
    while (true) {
      const Entry& entry = best(chosen, start, count);
      if (entry.choice < 0) break;
      const auto j = static_cast<std::size_t>(entry.choice);
      out.probe_string.push_back(sorted_[j]);
      chosen |= std::uint64_t{1} << j;
      start = j + 1;
      ++count;
    }
    return out;
  }

 private:
  struct Entry {
    double value = 0.0;
    int choice = -1;
  };

  std::uint64_t key(std::uint64_t chosen, std::size_t start, std::size_t count) const {
    // Patience collapses the state to (position, probes used).
    if (patience_) return static_cast<std::uint64_t>(start) * 128 + count;
    return chosen;
  }

  bool feasible(std::uint64_t chosen, std::size_t j, std::size_t count) {
    if (patience_) return count + 1 <= *patience_;
    scratch_.clear();
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
      if ((chosen >> i) & 1U) scratch_.push_back(sorted_[i]);
    }
    scratch_.push_back(sorted_[j]);
    return admits(c_, scratch_);
  }

  const Entry& best(std::uint64_t chosen, std::size_t start, std::size_t count) {
    const std::uint64_t k = key(chosen, start, count);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    Entry entry;  // stopping is always allowed
    for (std::size_t j = start; j < sorted_.size(); ++j) {
      const Edge& e = g_.edge(sorted_[j]);
      // A zero-value edge only spends budget; every constraint here stays
      // admissible when it is dropped.
      if (e.p * e.w <= 0.0 || !feasible(chosen, j, count)) continue;
      const double rest = best(chosen | (std::uint64_t{1} << j), j + 1, count + 1).value;
      const double value = e.p * e.w + (1.0 - e.p) * rest;
      if (value > entry.value + kTieTolerance) {
        entry.value = value;
        entry.choice = static_cast<int>(j);
      }
    }
    return memo_.emplace(k, entry).first->second;
  }

  const StochasticGraph& g_;
  const ConstraintSpec& c_;
  std::vector<EdgeId> sorted_;
  std::optional<std::size_t> patience_;
  std::unordered_map<std::uint64_t, Entry> memo_;
  std::vector<EdgeId> scratch_;
};

}  // namespace detail

/// Best admissible probe string for v using only edges into R.
///
/// Order-free constraints use the weight-sorted recursion; explicit string
/// lists are searched exhaustively. Edges with w·p = 0 are never probed.
/// Among equal values stopping wins, then the smallest position; for
/// explicit lists the shorter string wins, then the earlier one.
inline StarPolicy dp_opt(const StochasticGraph& g, std::size_t v, OfflineMask R,
                         std::size_t cap = default_string_cap()) {
  if (v >= g.num_online()) throw ValidationError("dp_opt: unknown online vertex");
  const ConstraintSpec& c = g.constraint(v);
  if (is_order_free(c)) {
    return detail::SortedStarDp(g, c, detail::weight_sorted_edges(g, v, R)).solve();
  }
  const auto fs = enumerate_feasible_strings(g, v, R, cap);
  if (fs.truncated) throw CapExceeded("dp_opt: string enumeration truncated");
  StarPolicy out;
  for (const auto& s : fs.strings) {
    const double value = expected_value(g, s);
    const bool tie = std::abs(value - out.value) <= kTieTolerance;
    if (value > out.value + kTieTolerance || (tie && s.size() < out.probe_string.size())) {
      out = {s, value};
    }
  }
  return out;
}

inline double opt_star_value(const StochasticGraph& g, std::size_t v, OfflineMask R) {
  return dp_opt(g, v, R).value;
}

/// Memoized dp_opt keyed by (v, R ∩ N(v)). Not thread-safe; use one per
/// worker.
class StarOptCache {
 public:
  explicit StarOptCache(const StochasticGraph& g)
      : g_(g), memo_(g.num_online()), nbr_(g.num_online()) {
    for (std::size_t v = 0; v < g.num_online(); ++v) nbr_[v] = g.neighbourhood(v);
  }

  const StarPolicy& get(std::size_t v, OfflineMask R) {
    const OfflineMask key = R & nbr_.at(v);
    auto it = memo_[v].find(key);
    if (it == memo_[v].end()) it = memo_[v].emplace(key, dp_opt(g_, v, key)).first;
    return it->second;
  }

  double value(std::size_t v, OfflineMask R) { return get(v, R).value; }

 private:
  const StochasticGraph& g_;
  std::vector<std::unordered_map<OfflineMask, StarPolicy>> memo_;
  std::vector<OfflineMask> nbr_;
};

/// Longest string built by walking the ranking and appending each edge into
/// R whose append keeps the string admissible. Zero-value edges are skipped,
/// as in dp_opt.
inline ProbeString ranking_probe_string(const StochasticGraph& g, std::size_t v,
                                        const Ranking& ranking, OfflineMask R) {
  ProbeString s;
  for (EdgeId e : ranking.order) {
    if (e >= g.num_edges() || g.edge(e).v != v) {
      throw ValidationError("ranking contains an edge not at the online vertex");
    }
    if (!in_mask(R, g.edge(e).u) || g.edge(e).p * g.edge(e).w <= 0.0) continue;
    s.push_back(e);
    if (!admits(g.constraint(v), s)) s.pop_back();
  }
  return s;
}

inline bool is_ranking_of(const StochasticGraph& g, std::size_t v, const Ranking& r) {
  std::vector<EdgeId> a = r.order, b = g.online_edges(v);
  std::sort(a.begin(), a.end());
  return a == b;
}

/// Searches for a ranking that reproduces dp_opt for every R ⊆ U.
///
/// Tries nonincreasing w·p, nonincreasing w, nonincreasing p (ties in the
/// order dp_opt uses), then every permutation when v has at most 7 edges.
/// Only R ∩ N(v) matters, so subsets of the neighbourhood are enumerated.
inline std::optional<Ranking> verify_rankable(const StochasticGraph& g, std::size_t v) {
  const auto& incident = g.online_edges(v);
  if (incident.size() > 20) throw CapExceeded("verify_rankable: more than 20 edges at vertex");

  std::vector<OfflineMask> subsets;
  const OfflineMask nbr = g.neighbourhood(v);
  for (OfflineMask R = nbr;; R = (R - 1) & nbr) {
    subsets.push_back(R);
    if (R == 0) break;
  }
  std::vector<ProbeString> target;
  target.reserve(subsets.size());
  for (OfflineMask R : subsets) target.push_back(dp_opt(g, v, R).probe_string);

  auto reproduces = [&](const Ranking& r) {
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      if (ranking_probe_string(g, v, r, subsets[i]) != target[i]) return false;
    }
    return true;
  };

  const std::vector<EdgeId> base = detail::weight_sorted_edges(g, v, full_mask(g.num_offline()));
  auto by_key = [&](auto key) {
    Ranking r{base};
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](EdgeId a, EdgeId b) { return key(g.edge(a)) > key(g.edge(b)); });
    return r;
  };
  for (const Ranking& r : {by_key([](const Edge& e) { return e.w * e.p; }),
                           by_key([](const Edge& e) { return e.w; }),
                           by_key([](const Edge& e) { return e.p; })}) {
    if (reproduces(r)) return r;
  }
  if (incident.size() <= 7) {
    Ranking r{incident};
    std::sort(r.order.begin(), r.order.end());
    do {
      if (reproduces(r)) return r;
    } while (std::next_permutation(r.order.begin(), r.order.end()));
  }
  return std::nullopt;
}

/// Which of the sufficient rankability conditions hold at v:
///   1: patience 1, or patience covering every edge at v;
///   2: patience, and p_{u1,v} <= p_{u2,v} implies w_{u1} <= w_{u2};
///   3: equal weights at v, budget, and p_{u1,v} <= p_{u2,v} implies
///      c_{u1,v} >= c_{u2,v}.
inline std::set<int> rankability_conditions(const StochasticGraph& g, std::size_t v) {
  std::set<int> out;
  const auto& incident = g.online_edges(v);
  auto pairwise = [&](auto implies) {
    for (EdgeId a : incident) {
      for (EdgeId b : incident) {
        if (a != b && g.edge(a).p <= g.edge(b).p && !implies(a, b)) return false;
      }
    }
    return true;
  };
  if (const auto* pat = std::get_if<Patience>(&g.constraint(v))) {
    if (pat->limit == 1 || pat->limit >= incident.size()) out.insert(1);
    if (pairwise([&](EdgeId a, EdgeId b) { return g.edge(a).w <= g.edge(b).w; })) out.insert(2);
  }
  if (const auto* budget = std::get_if<Budget>(&g.constraint(v))) {
    const bool unweighted = std::all_of(incident.begin(), incident.end(), [&](EdgeId e) {
      return g.edge(e).w == g.edge(incident.front()).w;
    });
    auto cost = [&](EdgeId e) {
      auto it = budget->costs.find(e);
      return it == budget->costs.end() ? 0.0 : it->second;
    };
    if (unweighted && pairwise([&](EdgeId a, EdgeId b) { return cost(a) >= cost(b); })) {
      out.insert(3);
    }
  }
  return out;
}

}  // namespace stochmatch
