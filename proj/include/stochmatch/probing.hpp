#pragma once

// String-level primitives: survival products, expected value of probing a
// string in order, constraint membership, enumeration and closure checks.

#include <algorithm>
#include <cstdlib>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"

namespace stochmatch {

inline constexpr std::size_t kDefaultStringCap = 200000;

/// Enumeration cap: STOCHMATCH_CAP if set to a positive integer, otherwise
/// the default.
inline std::size_t default_string_cap() {
  if (const char* env = std::getenv("STOCHMATCH_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultStringCap;
}

namespace detail {
inline void check_edges(const StochasticGraph& g, std::span<const EdgeId> s) {
  for (EdgeId e : s) {
    if (e >= g.num_edges()) throw ValidationError("edge " + std::to_string(e) + " not in graph");
  }
}
}  // namespace detail

/// Probability that every edge of `s` is inactive; 1 for the empty string.
inline double survival(const StochasticGraph& g, std::span<const EdgeId> s) {
  detail::check_edges(g, s);
  double q = 1.0;
  for (EdgeId e : s) q *= 1.0 - g.edge(e).p;
  return q;
}

/// Expected weight of the first active edge when `s` is probed in order.
inline double expected_value(const StochasticGraph& g, std::span<const EdgeId> s) {
  detail::check_edges(g, s);
  double value = 0.0, alive = 1.0;
  for (EdgeId e : s) {
    const Edge& ed = g.edge(e);
    value += alive * ed.p * ed.w;
    alive *= 1.0 - ed.p;
  }
  return value;
}

/// Whether `s` is admissible for online vertex v. Throws if `s` uses an edge
/// not at v or repeats an edge.
inline bool membership(const StochasticGraph& g, std::size_t v, std::span<const EdgeId> s) {
  detail::check_edges(g, s);
  std::set<EdgeId> seen;
  for (EdgeId e : s) {
    if (g.edge(e).v != v) {
      throw ValidationError("edge " + std::to_string(e) + " is not incident to online vertex " +
                            std::to_string(v));
    }
    if (!seen.insert(e).second) throw ValidationError("probe string repeats an edge");
  }
  return admits(g.constraint(v), s);
}

struct FeasibleStringSet {
  std::size_t online_vertex = 0;
  std::vector<ProbeString> strings;  // lexicographic order, empty string first
  bool truncated = false;
};

/// All admissible strings over `edges`, depth first in lexicographic edge-id
/// order. Stops after `cap` strings and flags the result as truncated.
inline FeasibleStringSet enumerate_feasible_strings(const ConstraintSpec& c,
                                                    std::span<const EdgeId> edges,
                                                    std::size_t cap) {
  if (cap == 0) throw ValidationError("enumeration cap must be positive");
  std::vector<EdgeId> pool(edges.begin(), edges.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const std::set<EdgeId> allowed(pool.begin(), pool.end());
  auto within = [&](const std::vector<EdgeId>& s) {
    return std::all_of(s.begin(), s.end(), [&](EdgeId e) { return allowed.count(e) > 0; });
  };

  FeasibleStringSet out;
  auto push = [&](ProbeString s) {
    if (out.strings.size() >= cap) {
      out.truncated = true;
      return false;
    }
    out.strings.push_back(std::move(s));
    return true;
  };

  if (const auto* strings = std::get_if<ExplicitStrings>(&c)) {
    std::set<ProbeString> members{ProbeString{}};
    for (const auto& s : strings->members) {
      if (within(s)) members.insert(s);
    }
    for (const auto& s : members) {
      if (!push(s)) break;
    }
    return out;
  }
  if (const auto* family = std::get_if<ExplicitFamily>(&c)) {
    std::set<ProbeString> members{ProbeString{}};
    for (const auto& m : family->members) {
      if (!within(m)) continue;
      ProbeString s = m;
      std::sort(s.begin(), s.end());
      do {
        members.insert(s);
      } while (std::next_permutation(s.begin(), s.end()));
    }
    for (const auto& s : members) {
      if (!push(s)) break;
    }
    return out;
  }

  // Patience and budget are prefix-closed, so depth-first extension by
  // admissible appends reaches every member.
  ProbeString current;
  std::vector<bool> used(pool.size(), false);
  auto dfs = [&](auto&& self) -> bool {
    if (!push(current)) return false;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      current.push_back(pool[i]);
      if (admits(c, current)) {
        used[i] = true;
        const bool more = self(self);
        used[i] = false;
        if (!more) {
          current.pop_back();
          return false;
        }
      }
      current.pop_back();
    }
    return true;
  };
  dfs(dfs);
  return out;
}

inline FeasibleStringSet enumerate_feasible_strings(const StochasticGraph& g, std::size_t v,
                                                    std::size_t cap = default_string_cap()) {
  auto fs = enumerate_feasible_strings(g.constraint(v), g.online_edges(v), cap);
  fs.online_vertex = v;
  return fs;
}

/// Strings of C_v restricted to edges whose offline endpoint lies in `R`.
inline FeasibleStringSet enumerate_feasible_strings(const StochasticGraph& g, std::size_t v,
                                                    OfflineMask R, std::size_t cap) {
  std::vector<EdgeId> edges;
  for (EdgeId e : g.online_edges(v)) {
    if (in_mask(R, g.edge(e).u)) edges.push_back(e);
  }
  auto fs = enumerate_feasible_strings(g.constraint(v), edges, cap);
  fs.online_vertex = v;
  return fs;
}

namespace detail {
inline std::set<ProbeString> as_set(const FeasibleStringSet& fs, const char* what) {
  if (fs.truncated) throw ValidationError(std::string(what) + ": string set is truncated");
  return {fs.strings.begin(), fs.strings.end()};
}
}  // namespace detail

/// Every prefix of a member is a member.
inline bool check_prefix_closed(const FeasibleStringSet& fs) {
  const auto members = detail::as_set(fs, "check_prefix_closed");
  return members.count({}) > 0 && detail::strings_prefix_closed(members);
}

/// Every permutation of a member is a member.
inline bool check_permutation_closed(const FeasibleStringSet& fs) {
  const auto members = detail::as_set(fs, "check_permutation_closed");
  for (const auto& s : members) {
    ProbeString t = s;
    std::sort(t.begin(), t.end());
    do {
      if (!members.count(t)) return false;
    } while (std::next_permutation(t.begin(), t.end()));
  }
  return true;
}

/// Every subsequence of a member is a member.
inline bool check_substring_closed(const FeasibleStringSet& fs) {
  const auto members = detail::as_set(fs, "check_substring_closed");
  if (!members.count({})) return false;
  for (const auto& s : members) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      ProbeString t = s;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      if (!members.count(t)) return false;
    }
  }
  return true;
}

}  // namespace stochmatch
