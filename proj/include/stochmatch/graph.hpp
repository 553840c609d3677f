#pragma once

// Stochastic bipartite graph model: offline vertices U, online vertices V,
// edges with activation probability and weight, and one probing constraint
// per online vertex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "stochmatch/errors.hpp"

namespace stochmatch {

/// Dense edge index, assigned in input order.
using EdgeId = std::size_t;

/// Ordered tuple of distinct edges at one online vertex. Empty is the
/// empty string.
using ProbeString = std::vector<EdgeId>;

/// Subset of offline vertices, bit i standing for offline vertex i.
using OfflineMask = std::uint64_t;

inline constexpr std::size_t kMaxOffline = 64;

inline OfflineMask full_mask(std::size_t n) {
  return n >= 64 ? ~OfflineMask{0} : (OfflineMask{1} << n) - 1;
}

inline bool in_mask(OfflineMask m, std::size_t i) { return (m >> i) & 1U; }

struct Edge {
  std::size_t u = 0;  // offline endpoint
  std::size_t v = 0;  // online endpoint
  double p = 0.0;
  double w = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// ---------------------------------------------------------------------------
// Probing constraints

/// At most `limit` probes.
struct Patience {
  std::size_t limit = 0;
  friend bool operator==(const Patience&, const Patience&) = default;
};

/// Any set of edges whose summed cost stays within `budget`.
struct Budget {
  double budget = 0.0;
  std::map<EdgeId, double> costs;
  friend bool operator==(const Budget&, const Budget&) = default;
};

/// An explicit list of admissible probe strings.
struct ExplicitStrings {
  std::set<ProbeString> members;
  friend bool operator==(const ExplicitStrings&, const ExplicitStrings&) = default;
};

/// An explicit family of admissible edge sets; a string is admissible when
/// its support is a member. Members are stored sorted.
struct ExplicitFamily {
  std::set<std::vector<EdgeId>> members;
  friend bool operator==(const ExplicitFamily&, const ExplicitFamily&) = default;
};

using ConstraintSpec = std::variant<Patience, Budget, ExplicitStrings, ExplicitFamily>;

inline ExplicitStrings make_strings(std::vector<ProbeString> members) {
  ExplicitStrings c;
  c.members.insert(ProbeString{});
  for (auto& s : members) c.members.insert(std::move(s));
  return c;
}

inline ExplicitFamily make_family(std::vector<std::vector<EdgeId>> members) {
  ExplicitFamily c;
  c.members.insert(std::vector<EdgeId>{});
  for (auto& s : members) {
    std::sort(s.begin(), s.end());
    c.members.insert(std::move(s));
  }
  return c;
}

/// True for the variants whose membership depends only on the support of a
/// string (patience, budget, set family).
inline bool is_order_free(const ConstraintSpec& c) {
  return !std::holds_alternative<ExplicitStrings>(c);
}

/// Raw membership test. Assumes `s` holds distinct edges at the right vertex;
/// see `membership` in probing.hpp for the checked version.
inline bool admits(const ConstraintSpec& c, std::span<const EdgeId> s) {
  if (s.empty()) return true;
  return std::visit(
      [&](const auto& spec) -> bool {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, Patience>) {
          return s.size() <= spec.limit;
        } else if constexpr (std::is_same_v<T, Budget>) {
          double total = 0.0;
          for (EdgeId e : s) {
            auto it = spec.costs.find(e);
            if (it == spec.costs.end()) return false;
            total += it->second;
          }
          return total <= spec.budget + 1e-12;
        } else if constexpr (std::is_same_v<T, ExplicitStrings>) {
          return spec.members.count(ProbeString(s.begin(), s.end())) > 0;
        } else {
          std::vector<EdgeId> support(s.begin(), s.end());
          std::sort(support.begin(), support.end());
          return spec.members.count(support) > 0;
        }
      },
      c);
}

// ---------------------------------------------------------------------------
// Graph

enum class WeightMode { edge, vertex };

class StochasticGraph {
 public:
  StochasticGraph() = default;

  /// Stores the data as given. Use `validate_graph` to check invariants.
  StochasticGraph(std::vector<std::string> offline, std::vector<std::string> online,
                  std::vector<Edge> edges, std::vector<ConstraintSpec> constraints,
                  WeightMode mode = WeightMode::edge, std::vector<double> vertex_weights = {})
      : offline_(std::move(offline)),
        online_(std::move(online)),
        edges_(std::move(edges)),
        constraints_(std::move(constraints)),
        mode_(mode),
        vertex_weights_(std::move(vertex_weights)) {
    index();
  }

  /// Vertex-weighted graph; every edge weight is overwritten with the weight
  /// of its offline endpoint.
  static StochasticGraph with_vertex_weights(std::vector<std::string> offline,
                                             std::vector<std::string> online,
                                             std::vector<double> weights, std::vector<Edge> edges,
                                             std::vector<ConstraintSpec> constraints) {
    for (auto& e : edges) {
      if (e.u < weights.size()) e.w = weights[e.u];
    }
    return StochasticGraph(std::move(offline), std::move(online), std::move(edges),
                           std::move(constraints), WeightMode::vertex, std::move(weights));
  }

  std::size_t num_offline() const { return offline_.size(); }
  std::size_t num_online() const { return online_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<std::string>& offline_names() const { return offline_; }
  const std::vector<std::string>& online_names() const { return online_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const std::vector<ConstraintSpec>& constraints() const { return constraints_; }
  const ConstraintSpec& constraint(std::size_t v) const { return constraints_.at(v); }
  WeightMode weight_mode() const { return mode_; }
  bool vertex_weighted() const { return mode_ == WeightMode::vertex; }
  const std::vector<double>& vertex_weights() const { return vertex_weights_; }

  /// Edges at online vertex v, in increasing id order.
  const std::vector<EdgeId>& online_edges(std::size_t v) const { return by_online_.at(v); }
  /// Edges at offline vertex u, in increasing id order.
  const std::vector<EdgeId>& offline_edges(std::size_t u) const { return by_offline_.at(u); }

  std::optional<EdgeId> find_edge(std::size_t u, std::size_t v) const {
    for (EdgeId e : by_online_.at(v)) {
      if (edges_[e].u == u) return e;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> offline_index(const std::string& name) const {
    return lookup(offline_, name);
  }
  std::optional<std::size_t> online_index(const std::string& name) const {
    return lookup(online_, name);
  }

  /// Offline vertices adjacent to v, as a mask.
  OfflineMask neighbourhood(std::size_t v) const {
    OfflineMask m = 0;
    for (EdgeId e : by_online_.at(v)) {
      if (edges_[e].u < kMaxOffline) m |= OfflineMask{1} << edges_[e].u;
    }
    return m;
  }

  friend bool operator==(const StochasticGraph& a, const StochasticGraph& b) {
    return a.offline_ == b.offline_ && a.online_ == b.online_ && a.edges_ == b.edges_ &&
           a.constraints_ == b.constraints_ && a.mode_ == b.mode_ &&
           a.vertex_weights_ == b.vertex_weights_;
  }

 private:
  static std::optional<std::size_t> lookup(const std::vector<std::string>& names,
                                           const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  }

  void index() {
    by_offline_.assign(offline_.size(), {});
    by_online_.assign(online_.size(), {});
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.u < offline_.size()) by_offline_[ed.u].push_back(e);
      if (ed.v < online_.size()) by_online_[ed.v].push_back(e);
    }
  }

  std::vector<std::string> offline_;
  std::vector<std::string> online_;
  std::vector<Edge> edges_;
  std::vector<ConstraintSpec> constraints_;
  WeightMode mode_ = WeightMode::edge;
  std::vector<double> vertex_weights_;
  std::vector<std::vector<EdgeId>> by_offline_;
  std::vector<std::vector<EdgeId>> by_online_;
};

// ---------------------------------------------------------------------------
// Matchings

struct Matching {
  std::vector<EdgeId> edges;  // sorted
  double weight = 0.0;
  friend bool operator==(const Matching&, const Matching&) = default;
};

/// Each online vertex in at most one edge; offline vertices may repeat.
struct OneSidedMatching {
  std::vector<EdgeId> edges;  // sorted
  friend bool operator==(const OneSidedMatching&, const OneSidedMatching&) = default;
};

inline Matching make_matching(const StochasticGraph& g, std::vector<EdgeId> edges) {
  std::sort(edges.begin(), edges.end());
  Matching m{std::move(edges), 0.0};
  for (EdgeId e : m.edges) m.weight += g.edge(e).w;
  return m;
}

inline bool is_matching(const StochasticGraph& g, const Matching& m) {
  std::set<std::size_t> us, vs;
  double w = 0.0;
  for (EdgeId e : m.edges) {
    if (e >= g.num_edges()) return false;
    if (!us.insert(g.edge(e).u).second || !vs.insert(g.edge(e).v).second) return false;
    w += g.edge(e).w;
  }
  return std::abs(w - m.weight) <= 1e-12 * std::max(1.0, std::abs(w));
}

inline bool is_one_sided(const StochasticGraph& g, const OneSidedMatching& m) {
  std::set<std::size_t> vs;
  for (EdgeId e : m.edges) {
    if (e >= g.num_edges() || !vs.insert(g.edge(e).v).second) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

namespace detail {

inline bool strings_prefix_closed(const std::set<ProbeString>& members) {
  for (const auto& s : members) {
    if (s.empty()) continue;
    if (!members.count(ProbeString(s.begin(), s.end() - 1))) return false;
  }
  return true;
}

inline bool family_downward_closed(const std::set<std::vector<EdgeId>>& members) {
  for (const auto& s : members) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto t = s;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      if (!members.count(t)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Lists every violated graph invariant. Never throws.
inline ValidationReport validate_graph(const StochasticGraph& g) {
  ValidationReport r;
  auto issue = [&](std::string s) { r.issues.push_back(std::move(s)); };
  const std::size_t nu = g.num_offline(), nv = g.num_online();

  if (nu > kMaxOffline) issue("too many offline vertices (limit 64)");
  for (const auto* names : {&g.offline_names(), &g.online_names()}) {
    std::set<std::string> seen;
    for (const auto& n : *names) {
      if (!seen.insert(n).second) issue("duplicate vertex id '" + n + "'");
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const std::string where = "edge " + std::to_string(e) + ": ";
    if (ed.u >= nu) issue(where + "unknown offline vertex");
    if (ed.v >= nv) issue(where + "unknown online vertex");
    if (!pairs.insert({ed.u, ed.v}).second) issue(where + "duplicate edge");
    if (!(ed.p >= 0.0 && ed.p <= 1.0)) issue(where + "probability out of range");
    if (!(ed.w >= 0.0) || !std::isfinite(ed.w)) issue(where + "weight negative or not finite");
  }

  if (g.vertex_weighted()) {
    if (g.vertex_weights().size() != nu) {
      issue("vertex weights missing for some offline vertices");
    } else {
      for (std::size_t u = 0; u < nu; ++u) {
        if (!(g.vertex_weights()[u] >= 0.0) || !std::isfinite(g.vertex_weights()[u])) {
          issue("offline vertex '" + g.offline_names()[u] + "': weight negative or not finite");
        }
      }
      for (EdgeId e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(e);
        if (ed.u < nu && ed.w != g.vertex_weights()[ed.u]) {
          issue("edge " + std::to_string(e) + ": vertex-weight inconsistency");
        }
      }
    }
  }

  if (g.constraints().size() != nv) {
    issue("every online vertex needs exactly one constraint");
    return r;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const std::string where = "constraint of '" + g.online_names()[v] + "': ";
    auto incident = [&](EdgeId e) { return e < g.num_edges() && g.edge(e).v == v; };
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Budget>) {
            if (!(spec.budget >= 0.0)) issue(where + "negative budget");
            for (const auto& [e, c] : spec.costs) {
              if (!incident(e)) issue(where + "cost for edge not at this vertex");
              if (!(c >= 0.0)) issue(where + "negative cost");
            }
            for (EdgeId e : g.online_edges(v)) {
              if (!spec.costs.count(e)) issue(where + "missing cost for edge " + std::to_string(e));
            }
          } else if constexpr (std::is_same_v<T, ExplicitStrings>) {
            for (const auto& s : spec.members) {
              std::set<EdgeId> distinct(s.begin(), s.end());
              if (distinct.size() != s.size()) issue(where + "string repeats an edge");
              for (EdgeId e : s) {
                if (!incident(e)) issue(where + "string uses edge not at this vertex");
              }
            }
            if (!spec.members.count({})) issue(where + "empty string missing");
            if (!detail::strings_prefix_closed(spec.members)) issue(where + "not prefix-closed");
          } else if constexpr (std::is_same_v<T, ExplicitFamily>) {
            for (const auto& s : spec.members) {
              if (!std::is_sorted(s.begin(), s.end()) ||
                  std::adjacent_find(s.begin(), s.end()) != s.end()) {
                issue(where + "family member not a sorted set");
              }
              for (EdgeId e : s) {
                if (!incident(e)) issue(where + "family uses edge not at this vertex");
              }
            }
            if (!spec.members.count({})) issue(where + "empty set missing");
            if (!detail::family_downward_closed(spec.members)) {
              issue(where + "family not downward-closed");
            }
          }
        },
        g.constraint(v));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Induced subgraphs

/// G[S] together with the maps from new indices back to indices of G.
struct InducedSubgraph {
  StochasticGraph graph;
  std::vector<std::size_t> offline_map;
  std::vector<std::size_t> online_map;
  std::vector<EdgeId> edge_map;
};

/// Keeps the listed vertices (in the order of G) and every edge with both
/// endpoints kept. Constraints are restricted to strings over surviving edges.
inline InducedSubgraph induced_subgraph(const StochasticGraph& g,
                                        std::span<const std::size_t> offline_keep,
                                        std::span<const std::size_t> online_keep) {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> new_u(g.num_offline(), npos), new_v(g.num_online(), npos);
  for (std::size_t u : offline_keep) {
    if (u >= g.num_offline()) throw ValidationError("induced_subgraph: unknown offline vertex");
    new_u[u] = 0;
  }
  for (std::size_t v : online_keep) {
    if (v >= g.num_online()) throw ValidationError("induced_subgraph: unknown online vertex");
    new_v[v] = 0;
  }

  InducedSubgraph out;
  std::vector<std::string> offline, online;
  std::vector<double> weights;
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    if (new_u[u] == npos) continue;
    new_u[u] = offline.size();
    offline.push_back(g.offline_names()[u]);
    out.offline_map.push_back(u);
    if (g.vertex_weighted() && u < g.vertex_weights().size()) weights.push_back(g.vertex_weights()[u]);
  }
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    if (new_v[v] == npos) continue;
    new_v[v] = online.size();
    online.push_back(g.online_names()[v]);
    out.online_map.push_back(v);
  }

  std::vector<EdgeId> new_e(g.num_edges(), npos);
  std::vector<Edge> edges;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    if (ed.u >= g.num_offline() || ed.v >= g.num_online()) continue;
    if (new_u[ed.u] == npos || new_v[ed.v] == npos) continue;
    new_e[e] = edges.size();
    edges.push_back({new_u[ed.u], new_v[ed.v], ed.p, ed.w});
    out.edge_map.push_back(e);
  }

  auto remap = [&](std::span<const EdgeId> s, std::vector<EdgeId>& into) {
    into.clear();
    for (EdgeId e : s) {
      if (e >= new_e.size() || new_e[e] == npos) return false;
      into.push_back(new_e[e]);
    }
    return true;
  };

  std::vector<ConstraintSpec> constraints;
  for (std::size_t v : out.online_map) {
    constraints.push_back(std::visit(
        [&](const auto& spec) -> ConstraintSpec {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Patience>) {
            return spec;
          } else if constexpr (std::is_same_v<T, Budget>) {
            Budget b{spec.budget, {}};
            for (const auto& [e, c] : spec.costs) {
              if (e < new_e.size() && new_e[e] != npos) b.costs[new_e[e]] = c;
            }
            return b;
          } else if constexpr (std::is_same_v<T, ExplicitStrings>) {
            ExplicitStrings s;
            std::vector<EdgeId> tmp;
            for (const auto& m : spec.members) {
              if (remap(m, tmp)) s.members.insert(tmp);
            }
            return s;
          } else {
            ExplicitFamily f;
            std::vector<EdgeId> tmp;
            for (const auto& m : spec.members) {
              if (remap(m, tmp)) {
                std::sort(tmp.begin(), tmp.end());
                f.members.insert(tmp);
              }
            }
            return f;
          }
        },
        g.constraint(v)));
  }

  out.graph = StochasticGraph(std::move(offline), std::move(online), std::move(edges),
                              std::move(constraints), g.weight_mode(), std::move(weights));
  return out;
}

/// G[S] for a set of vertex names. A name matches offline and online
/// vertices alike.
inline StochasticGraph induced_subgraph(const StochasticGraph& g,
                                        const std::vector<std::string>& keep) {
  std::vector<std::size_t> us, vs;
  for (const auto& name : keep) {
    auto u = g.offline_index(name);
    auto v = g.online_index(name);
    if (!u && !v) throw ValidationError("induced_subgraph: unknown vertex id '" + name + "'");
    if (u) us.push_back(*u);
    if (v) vs.push_back(*v);
  }
  return induced_subgraph(g, us, vs).graph;
}

/// G[U ∪ {online vertices in `online_keep`}].
inline InducedSubgraph online_subgraph(const StochasticGraph& g,
                                       std::span<const std::size_t> online_keep) {
  std::vector<std::size_t> all(g.num_offline());
  for (std::size_t u = 0; u < all.size(); ++u) all[u] = u;
  return induced_subgraph(g, all, online_keep);
}

}  // namespace stochmatch
