#pragma once

// Exact offline benchmarks by memoized adaptive search: the committal
// prober, the non-committal prober, and a brute-force maximum-weight
// matching oracle.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/probing.hpp"

namespace stochmatch {

inline constexpr std::size_t kDefaultStateCap = 2000000;

/// Maximum-weight matching among `edges` by exhaustive include/exclude.
/// Ties (within 1e-12) go to the lexicographically smallest sorted id set.
inline Matching max_weight_matching(const StochasticGraph& g, std::span<const EdgeId> edges) {
  std::vector<EdgeId> pool(edges.begin(), edges.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (EdgeId e : pool) {
    if (e >= g.num_edges()) throw ValidationError("max_weight_matching: unknown edge");
  }

  std::vector<EdgeId> best, current;
  double best_weight = 0.0;
  std::vector<bool> used_u(g.num_offline(), false), used_v(g.num_online(), false);
  // Suffix sums bound what the remaining edges can add.
  std::vector<double> tail(pool.size() + 1, 0.0);
  for (std::size_t i = pool.size(); i-- > 0;) tail[i] = tail[i + 1] + std::max(0.0, g.edge(pool[i]).w);

  auto search = [&](auto&& self, std::size_t i, double weight) -> void {
    if (weight + tail[i] < best_weight - 1e-12) return;
    if (i == pool.size()) {
      if (weight > best_weight + 1e-12 ||
          (weight >= best_weight - 1e-12 && current < best)) {
        best_weight = weight;
        best = current;
      }
      return;
    }
    const Edge& e = g.edge(pool[i]);
    if (!used_u[e.u] && !used_v[e.v]) {
      used_u[e.u] = used_v[e.v] = true;
      current.push_back(pool[i]);
      self(self, i + 1, weight + e.w);
      current.pop_back();
      used_u[e.u] = used_v[e.v] = false;
    }
    self(self, i + 1, weight);
  };
  search(search, 0, 0.0);
  return make_matching(g, best);
}

namespace detail {

// Per-online-vertex probe histories interned as small integers. With
// `as_sets`, a history is keyed by its sorted edge set, which is sound for
// constraints that only look at the set of probed edges.
class HistoryTable {
 public:
  HistoryTable(const StochasticGraph& g, std::size_t v, bool as_sets)
      : g_(g), v_(v), as_sets_(as_sets) {
    intern({});
  }

  static constexpr std::uint32_t kNone = UINT32_MAX;

  /// Node reached by appending e, or kNone if inadmissible or repeated.
  std::uint32_t child(std::uint32_t node, EdgeId e) {
    const std::uint64_t key = (static_cast<std::uint64_t>(node) << 32) | e;
    if (auto it = children_.find(key); it != children_.end()) return it->second;
    ProbeString s = strings_[node];
    std::uint32_t out = kNone;
    if (std::find(s.begin(), s.end(), e) == s.end()) {
      s.push_back(e);
      if (admits(g_.constraint(v_), s)) out = intern(std::move(s));
    }
    children_.emplace(key, out);
    return out;
  }

 private:
  std::uint32_t intern(ProbeString s) {
    if (as_sets_) std::sort(s.begin(), s.end());
    auto [it, fresh] = ids_.emplace(s, static_cast<std::uint32_t>(strings_.size()));
    if (fresh) strings_.push_back(std::move(s));
    return it->second;
  }

  const StochasticGraph& g_;
  std::size_t v_;
  bool as_sets_;
  std::map<ProbeString, std::uint32_t> ids_;
  std::vector<ProbeString> strings_;
  std::unordered_map<std::uint64_t, std::uint32_t> children_;
};

inline std::string state_key(const std::vector<std::uint32_t>& nodes, std::uint64_t a,
                             std::uint64_t b) {
  std::string key(nodes.size() * 4 + 16, '\0');
  std::memcpy(key.data(), nodes.data(), nodes.size() * 4);
  std::memcpy(key.data() + nodes.size() * 4, &a, 8);
  std::memcpy(key.data() + nodes.size() * 4 + 8, &b, 8);
  return key;
}

}  // namespace detail

enum class SearchMode {
  fast,       // prunes dominated probes and canonicalizes order-free histories
  reference,  // every admissible probe, ordered histories
};

/// Expected weight of the optimal adaptive prober that respects commitment:
/// an active probe whose endpoints are both free is matched at once.
inline double committal_opt(const StochasticGraph& g, SearchMode mode = SearchMode::fast,
                            std::size_t state_cap = kDefaultStateCap) {
  if (g.num_online() > 64) throw CapExceeded("committal_opt: more than 64 online vertices");
  const bool fast = mode == SearchMode::fast;
  std::vector<detail::HistoryTable> tables;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    tables.emplace_back(g, v, fast && is_order_free(g.constraint(v)));
  }

  // In fast mode a matched online vertex is frozen at kDone.
  constexpr std::uint32_t kDone = detail::HistoryTable::kNone;
  std::vector<std::uint32_t> nodes(g.num_online(), 0);
  std::unordered_map<std::string, double> memo;

  auto value = [&](auto&& self, OfflineMask matched_u, std::uint64_t matched_v) -> double {
    std::string key = detail::state_key(nodes, matched_u, matched_v);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= state_cap) throw CapExceeded("committal_opt: state cap exceeded");

    double best = 0.0;
    for (std::size_t v = 0; v < g.num_online(); ++v) {
      const std::uint32_t node = nodes[v];
      if (node == kDone) continue;
      const bool v_free = !((matched_v >> v) & 1U);
      for (EdgeId e : g.online_edges(v)) {
        const Edge& ed = g.edge(e);
        const bool u_free = !in_mask(matched_u, ed.u);
        if (fast && (!u_free || ed.p <= 0.0) && is_order_free(g.constraint(v))) continue;
        const std::uint32_t next = tables[v].child(node, e);
        if (next == detail::HistoryTable::kNone) continue;

        nodes[v] = next;
        double active = 0.0, inactive = 0.0;
        if (ed.p > 0.0) {
          if (u_free && v_free) {
            if (fast) nodes[v] = kDone;
            active = ed.w + self(self, matched_u | (OfflineMask{1} << ed.u),
                                 matched_v | (std::uint64_t{1} << v));
            nodes[v] = next;
          } else {
            active = self(self, matched_u, matched_v);
          }
        }
        if (ed.p < 1.0) inactive = self(self, matched_u, matched_v);
        nodes[v] = node;
        best = std::max(best, ed.p * active + (1.0 - ed.p) * inactive);
      }
    }
    memo.emplace(std::move(key), best);
    return best;
  };
  return value(value, 0, 0);
}

/// Expected weight of the optimal adaptive prober that may pick any
/// maximum-weight matching among its active probes at the end.
inline double noncommittal_opt(const StochasticGraph& g, std::size_t state_cap = kDefaultStateCap) {
  if (g.num_edges() > 64) throw CapExceeded("noncommittal_opt: more than 64 edges");
  std::vector<detail::HistoryTable> tables;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    tables.emplace_back(g, v, is_order_free(g.constraint(v)));
  }
  std::vector<std::uint32_t> nodes(g.num_online(), 0);
  std::unordered_map<std::string, double> memo;
  std::unordered_map<std::uint64_t, double> terminal;

  auto matching_value = [&](std::uint64_t active) {
    if (auto it = terminal.find(active); it != terminal.end()) return it->second;
    std::vector<EdgeId> edges;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      if ((active >> e) & 1U) edges.push_back(e);
    }
    const double w = max_weight_matching(g, edges).weight;
    terminal.emplace(active, w);
    return w;
  };

  auto value = [&](auto&& self, std::uint64_t active) -> double {
    std::string key = detail::state_key(nodes, active, 0);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= state_cap) throw CapExceeded("noncommittal_opt: state cap exceeded");

    double best = matching_value(active);
    for (std::size_t v = 0; v < g.num_online(); ++v) {
      const std::uint32_t node = nodes[v];
      for (EdgeId e : g.online_edges(v)) {
        const Edge& ed = g.edge(e);
        if (ed.p <= 0.0 && is_order_free(g.constraint(v))) continue;
        const std::uint32_t next = tables[v].child(node, e);
        if (next == detail::HistoryTable::kNone) continue;
        nodes[v] = next;
        double on = 0.0, off = 0.0;
        if (ed.p > 0.0) on = self(self, active | (std::uint64_t{1} << e));
        if (ed.p < 1.0) off = self(self, active);
        nodes[v] = node;
        best = std::max(best, ed.p * on + (1.0 - ed.p) * off);
      }
    }
    memo.emplace(std::move(key), best);
    return best;
  };
  return value(value, 0);
}

}  // namespace stochmatch
