#pragma once

// Builders for the probing relaxations: the configuration LP over feasible
// strings, the edge-based LPs with unit or general patience, and the
// star-value LPs for the committal and non-committal benchmarks.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stochmatch/benchmarks.hpp"
#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/probing.hpp"
#include "stochmatch/star_opt.hpp"

namespace stochmatch {

/// Largest offline side for which star-value LPs are materialized.
inline constexpr std::size_t kMaxStarLpOffline = 15;

struct ConfigColumn {
  std::size_t online_vertex = 0;
  ProbeString probe_string;
};

struct ConfigLp {
  LinearProgram lp;
  std::vector<ConfigColumn> columns;  // aligned with lp.variables()
};

namespace detail {

inline std::string edge_label(const StochasticGraph& g, EdgeId e) {
  return g.offline_names()[g.edge(e).u] + "." + g.online_names()[g.edge(e).v];
}

inline std::string string_label(const StochasticGraph& g, std::size_t v, const ProbeString& s) {
  std::string out = "x." + g.online_names()[v];
  if (s.empty()) return out + ".empty";
  for (EdgeId e : s) out += "." + g.offline_names()[g.edge(e).u];
  return out;
}

inline void require_patience(const StochasticGraph& g, bool unit, const char* who) {
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const auto* pat = std::get_if<Patience>(&g.constraint(v));
    if (!pat) throw ValidationError(std::string(who) + ": patience constraints required");
    if (unit && pat->limit != 1) throw ValidationError(std::string(who) + ": unit patience required");
  }
}

}  // namespace detail

/// One column per (online vertex, admissible string); per-offline rows bound
/// the expected number of matches, per-online rows make each vertex's
/// columns a distribution.
inline ConfigLp build_lp_config(const StochasticGraph& g, std::size_t cap = default_string_cap()) {
  ConfigLp out;
  std::vector<std::vector<LpTerm>> offline_rows(g.num_offline());
  std::vector<std::vector<LpTerm>> online_rows(g.num_online());
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const auto fs = enumerate_feasible_strings(g, v, cap);
    if (fs.truncated) throw CapExceeded("build_lp_config: string enumeration truncated");
    for (const auto& s : fs.strings) {
      const std::size_t j = out.lp.add_variable(detail::string_label(g, v, s), "x_v(string)",
                                                expected_value(g, s));
      out.columns.push_back({v, s});
      online_rows[v].push_back({j, 1.0});
      double alive = 1.0;
      for (EdgeId e : s) {
        offline_rows[g.edge(e).u].push_back({j, g.edge(e).p * alive});
        alive *= 1.0 - g.edge(e).p;
      }
    }
  }
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    out.lp.add_row("match." + g.offline_names()[u], std::move(offline_rows[u]), Relation::less_equal, 1.0);
  }
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    out.lp.add_row("dist." + g.online_names()[v], std::move(online_rows[v]), Relation::equal, 1.0);
  }
  return out;
}

/// Probability that each edge is probed under the string distributions of a
/// configuration solution.
inline std::vector<double> edge_marginals_from_config_solution(const StochasticGraph& g,
                                                               const ConfigLp& config,
                                                               const LpSolution& sol) {
  if (sol.values.size() != config.columns.size()) {
    throw ValidationError("edge_marginals: solution does not match the configuration LP");
  }
  std::vector<double> marginal(g.num_edges(), 0.0);
  for (std::size_t j = 0; j < config.columns.size(); ++j) {
    double alive = 1.0;
    for (EdgeId e : config.columns[j].probe_string) {
      marginal[e] += alive * sol.values[j];
      alive *= 1.0 - g.edge(e).p;
    }
  }
  return marginal;
}

namespace detail {

inline LinearProgram edge_lp(const StochasticGraph& g, bool unit) {
  LinearProgram lp;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    lp.add_variable("x." + edge_label(g, e), "x_{u,v}", g.edge(e).w * g.edge(e).p);
  }
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    std::vector<LpTerm> terms;
    for (EdgeId e : g.offline_edges(u)) terms.push_back({e, g.edge(e).p});
    lp.add_row("match." + g.offline_names()[u], std::move(terms), Relation::less_equal, 1.0);
  }
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const std::string& name = g.online_names()[v];
    std::vector<LpTerm> prob, count;
    for (EdgeId e : g.online_edges(v)) {
      prob.push_back({e, g.edge(e).p});
      count.push_back({e, 1.0});
    }
    if (unit) {
      lp.add_row("probe." + name, std::move(count), Relation::less_equal, 1.0);
      continue;
    }
    const auto limit = static_cast<double>(std::get<Patience>(g.constraint(v)).limit);
    lp.add_row("match." + name, std::move(prob), Relation::less_equal, 1.0);
    lp.add_row("patience." + name, std::move(count), Relation::less_equal, limit);
  }
  if (!unit) {
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      lp.add_row("cap." + edge_label(g, e), {{e, 1.0}}, Relation::less_equal, 1.0);
    }
  }
  return lp;
}

}  // namespace detail

/// Edge LP for unit patience: one expected match per offline vertex, one
/// probe per online vertex.
inline LinearProgram build_lp_std_unit(const StochasticGraph& g) {
  detail::require_patience(g, true, "build_lp_std_unit");
  return detail::edge_lp(g, true);
}

/// Edge LP for general patience: match rows on both sides, a patience row
/// per online vertex and x_e <= 1.
inline LinearProgram build_lp_std(const StochasticGraph& g) {
  detail::require_patience(g, false, "build_lp_std");
  return detail::edge_lp(g, false);
}

/// Star values keyed by (online vertex, offline subset). Only subsets of
/// each vertex's neighbourhood are stored.
using StarValueTable = std::map<std::pair<std::size_t, OfflineMask>, double>;

inline void check_star_lp_size(const StochasticGraph& g, const char* who) {
  if (g.num_offline() > kMaxStarLpOffline) {
    throw CapExceeded(std::string(who) + ": more than 15 offline vertices");
  }
}

inline StarValueTable compute_star_values(const StochasticGraph& g) {
  check_star_lp_size(g, "compute_star_values");
  StarValueTable out;
  StarOptCache cache(g);
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const OfflineMask nbr = g.neighbourhood(v);
    for (OfflineMask R = nbr;; R = (R - 1) & nbr) {
      out[{v, R}] = cache.value(v, R);
      if (R == 0) break;
    }
  }
  return out;
}

/// Non-committal value of the star at v restricted to R.
inline double noncommittal_star_value(const StochasticGraph& g, std::size_t v, OfflineMask R) {
  std::vector<std::size_t> keep_u;
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    if (in_mask(R, u)) keep_u.push_back(u);
  }
  const std::vector<std::size_t> keep_v{v};
  return noncommittal_opt(induced_subgraph(g, keep_u, keep_v).graph);
}

inline StarValueTable compute_noncommittal_star_values(const StochasticGraph& g) {
  check_star_lp_size(g, "compute_noncommittal_star_values");
  StarValueTable out;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const OfflineMask nbr = g.neighbourhood(v);
    for (OfflineMask R = nbr;; R = (R - 1) & nbr) {
      out[{v, R}] = noncommittal_star_value(g, v, R);
      if (R == 0) break;
    }
  }
  return out;
}

namespace detail {

inline double star_lookup(const StarValueTable& values, std::size_t v, OfflineMask R) {
  auto it = values.find({v, R});
  if (it == values.end()) throw ValidationError("star value table is missing an entry");
  return it->second;
}

// Rows over subsets of N(v) only: for any other R the row coincides with
// the one for R ∩ N(v).
template <class TermFor>
void add_star_rows(LinearProgram& lp, const StochasticGraph& g, const StarValueTable& values,
                   TermFor term_for) {
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const OfflineMask nbr = g.neighbourhood(v);
    for (OfflineMask R = nbr; R != 0; R = (R - 1) & nbr) {
      std::vector<LpTerm> terms;
      for (EdgeId e : g.online_edges(v)) {
        if (in_mask(R, g.edge(e).u)) terms.push_back(term_for(e));
      }
      lp.add_row("star." + g.online_names()[v] + "." + std::to_string(R), std::move(terms),
                 Relation::less_equal, star_lookup(values, v, R));
    }
  }
}

}  // namespace detail

/// Edge LP whose per-star rows are capped by the committal star values.
inline LinearProgram build_lp_dp(const StochasticGraph& g, const StarValueTable& star_values) {
  check_star_lp_size(g, "build_lp_dp");
  LinearProgram lp;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    lp.add_variable("x." + detail::edge_label(g, e), "x_{u,v}", g.edge(e).w * g.edge(e).p);
  }
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    std::vector<LpTerm> terms;
    for (EdgeId e : g.offline_edges(u)) terms.push_back({e, g.edge(e).p});
    lp.add_row("match." + g.offline_names()[u], std::move(terms), Relation::less_equal, 1.0);
  }
  detail::add_star_rows(lp, g, star_values, [&](EdgeId e) {
    return LpTerm{e, g.edge(e).w * g.edge(e).p};
  });
  return lp;
}

inline LinearProgram build_lp_dp(const StochasticGraph& g) {
  return build_lp_dp(g, compute_star_values(g));
}

/// Probe variables x_e and match variables z_e <= p_e x_e, with star rows
/// capped by the non-committal star values.
inline LinearProgram build_lp_dp_non(const StochasticGraph& g, const StarValueTable& non_values) {
  check_star_lp_size(g, "build_lp_dp_non");
  LinearProgram lp;
  const std::size_t m = g.num_edges();
  for (EdgeId e = 0; e < m; ++e) lp.add_variable("x." + detail::edge_label(g, e), "x_{u,v}", 0.0);
  for (EdgeId e = 0; e < m; ++e) {
    lp.add_variable("z." + detail::edge_label(g, e), "z_{u,v}", g.edge(e).w);
  }
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    std::vector<LpTerm> terms;
    for (EdgeId e : g.offline_edges(u)) terms.push_back({m + e, 1.0});
    lp.add_row("match." + g.offline_names()[u], std::move(terms), Relation::less_equal, 1.0);
  }
  detail::add_star_rows(lp, g, non_values, [&](EdgeId e) { return LpTerm{m + e, g.edge(e).w}; });
  for (EdgeId e = 0; e < m; ++e) {
    lp.add_row("active." + detail::edge_label(g, e), {{m + e, 1.0}, {e, -g.edge(e).p}},
               Relation::less_equal, 0.0);
  }
  return lp;
}

inline LinearProgram build_lp_dp_non(const StochasticGraph& g) {
  return build_lp_dp_non(g, compute_noncommittal_star_values(g));
}

}  // namespace stochmatch
