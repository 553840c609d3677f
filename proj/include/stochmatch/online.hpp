#pragma once

// Arrival orders, sampled edge states, string-distribution probing, and the
// online algorithms: the LP-guided random-order algorithm, Greedy-DP (with
// its dual charging instrumentation) and greedy single-edge probing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/lp_builders.hpp"
#include "stochmatch/probing.hpp"
#include "stochmatch/rng.hpp"
#include "stochmatch/star_opt.hpp"

namespace stochmatch {

// ---------------------------------------------------------------------------
// Edge states

/// Active/inactive state of every edge, fixed before a run so that separate
/// runs can share it.
struct World {
  std::vector<char> active;
  bool operator[](EdgeId e) const { return active.at(e) != 0; }
};

/// One uniform draw per edge, in edge order.
inline World sample_world(const StochasticGraph& g, Rng& rng) {
  World w;
  w.active.resize(g.num_edges());
  for (EdgeId e = 0; e < g.num_edges(); ++e) w.active[e] = rng.bernoulli(g.edge(e).p) ? 1 : 0;
  return w;
}

/// Probability of `w` under independent edge states.
inline double world_probability(const StochasticGraph& g, const World& w) {
  double prob = 1.0;
  for (EdgeId e = 0; e < g.num_edges(); ++e) prob *= w[e] ? g.edge(e).p : 1.0 - g.edge(e).p;
  return prob;
}

// ---------------------------------------------------------------------------
// Arrival orders

struct ArrivalOrder {
  std::vector<std::size_t> sequence;  // online vertices in arrival order
  std::vector<double> times;          // per online vertex; empty for a bare permutation

  bool has_times() const { return !times.empty(); }
  double time_of(std::size_t v) const {
    if (times.empty()) throw ValidationError("arrival order has no arrival times");
    return times.at(v);
  }

  static ArrivalOrder permutation(std::vector<std::size_t> sequence, std::size_t n) {
    std::vector<std::size_t> sorted = sequence;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] != i) throw ValidationError("arrival order is not a permutation");
    }
    if (sorted.size() != n) throw ValidationError("arrival order is not a permutation");
    return {std::move(sequence), {}};
  }

  /// Orders vertices by ascending time. Times must be distinct and in [0, 1].
  static ArrivalOrder from_times(std::vector<double> times) {
    std::vector<std::size_t> seq(times.size());
    for (std::size_t v = 0; v < seq.size(); ++v) {
      if (!(times[v] >= 0.0 && times[v] <= 1.0)) throw ValidationError("arrival time outside [0, 1]");
      seq[v] = v;
    }
    std::sort(seq.begin(), seq.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (times[seq[i]] == times[seq[i - 1]]) throw ValidationError("arrival times must be distinct");
    }
    return {std::move(seq), std::move(times)};
  }
};

inline ArrivalOrder identity_order(std::size_t n) {
  std::vector<std::size_t> seq(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = i;
  return {seq, {}};
}

inline ArrivalOrder random_permutation_order(std::size_t n, Rng& rng) {
  ArrivalOrder order = identity_order(n);
  rng.shuffle(order.sequence.begin(), order.sequence.end());
  return order;
}

/// Independent uniform arrival times; a vertex whose time collides with an
/// earlier one redraws.
inline std::vector<double> draw_arrival_times(std::size_t n, Rng& rng) {
  std::vector<double> y(n);
  std::set<double> seen;
  for (std::size_t v = 0; v < n; ++v) {
    do {
      y[v] = rng.uniform();
    } while (!seen.insert(y[v]).second);
  }
  return y;
}

inline ArrivalOrder random_time_order(std::size_t n, Rng& rng) {
  return ArrivalOrder::from_times(draw_arrival_times(n, rng));
}

// ---------------------------------------------------------------------------
// Probing against a string distribution

struct StringDistribution {
  std::size_t online_vertex = 0;
  std::vector<ProbeString> strings;
  std::vector<double> mass;
};

inline void check_distribution(const StringDistribution& d) {
  if (d.strings.size() != d.mass.size()) throw ValidationError("distribution size mismatch");
  double total = 0.0;
  for (double m : d.mass) {
    if (!(m >= -1e-12)) throw ValidationError("distribution has a negative mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("distribution does not sum to 1");
}

/// The columns of `v` in a configuration solution, as a distribution.
inline StringDistribution distribution_for(const ConfigLp& config, const LpSolution& sol,
                                           std::size_t v) {
  if (sol.values.size() != config.columns.size()) {
    throw ValidationError("solution does not match the configuration LP");
  }
  StringDistribution d;
  d.online_vertex = v;
  for (std::size_t j = 0; j < config.columns.size(); ++j) {
    if (config.columns[j].online_vertex != v) continue;
    d.strings.push_back(config.columns[j].probe_string);
    d.mass.push_back(std::max(0.0, sol.values[j]));
  }
  return d;
}

struct ProbeOutcome {
  std::size_t drawn = 0;          // index into the distribution
  std::size_t probes = 0;         // edges probed before stopping
  std::optional<EdgeId> edge;     // first active edge, if any
};

/// Draws one string and probes it in order until the first active edge.
/// Edge states come from `world` when given, otherwise from fresh draws.
inline ProbeOutcome vertex_probe(const StochasticGraph& g, const StringDistribution& d, Rng& rng,
                                 const World* world = nullptr) {
  check_distribution(d);
  ProbeOutcome out;
  const double r = rng.uniform();
  double acc = 0.0;
  out.drawn = d.strings.size();
  std::size_t last_positive = d.strings.size();
  for (std::size_t i = 0; i < d.strings.size(); ++i) {
    if (d.mass[i] <= 0.0) continue;
    last_positive = i;
    acc += d.mass[i];
    if (r < acc) {
      out.drawn = i;
      break;
    }
  }
  if (out.drawn == d.strings.size()) out.drawn = last_positive;  // rounding at the top end
  if (out.drawn == d.strings.size()) throw ValidationError("distribution has no positive mass");

  for (EdgeId e : d.strings[out.drawn]) {
    if (g.edge(e).v != d.online_vertex) throw ValidationError("string edge not at the online vertex");
    ++out.probes;
    const bool active = world ? (*world)[e] : rng.bernoulli(g.edge(e).p);
    if (active) {
      out.edge = e;
      break;
    }
  }
  return out;
}

/// Every online vertex runs vertex_probe on its configuration columns and
/// keeps the returned edge; offline vertices may be used more than once.
inline OneSidedMatching relaxed_benchmark_run(const StochasticGraph& g, const ConfigLp& config,
                                              const LpSolution& sol, Rng& rng,
                                              const World* world = nullptr) {
  if (sol.status != LpStatus::optimal) throw ValidationError("relaxed run needs an optimal solution");
  OneSidedMatching out;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const auto outcome = vertex_probe(g, distribution_for(config, sol, v), rng, world);
    if (outcome.edge) out.edges.push_back(*outcome.edge);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

// ---------------------------------------------------------------------------
// Run records

enum class ChargeCurve { exponential, half };

inline double charge_g(ChargeCurve c, double z) {
  return c == ChargeCurve::exponential ? std::exp(z - 1.0) : 0.5;
}

inline double charge_F(ChargeCurve c) {
  return c == ChargeCurve::exponential ? 1.0 - 1.0 / std::numbers::e : 0.5;
}

inline const char* to_string(ChargeCurve c) {
  return c == ChargeCurve::exponential ? "exp(z-1)" : "1/2";
}

using StarKey = std::pair<std::size_t, OfflineMask>;

struct DualCharges {
  ChargeCurve curve = ChargeCurve::exponential;
  double F = 0.0;
  std::vector<double> alpha;               // per offline vertex
  std::map<StarKey, double> phi;           // per (online vertex, free set at arrival)
  std::map<StarKey, double> star_value;    // OPT(v, R) for each charged key

  /// F·(Σα + Σ OPT(v,R)·φ).
  double dual_objective() const {
    double total = 0.0;
    for (double a : alpha) total += a;
    for (const auto& [key, value] : phi) total += star_value.at(key) * value;
    return F * total;
  }
};

struct ProbeEvent {
  EdgeId edge = 0;
  bool active = false;
};

struct ArrivalStep {
  std::size_t online_vertex = 0;
  OfflineMask free_before = 0;  // unmatched offline vertices on arrival
  OfflineMask free_after = 0;   // unmatched offline vertices once processed
  bool passed = false;
  std::optional<EdgeId> matched;
};

struct RunRecord {
  std::string algorithm;
  ArrivalOrder order;
  std::uint64_t seed = 0;
  std::vector<ProbeEvent> probes;
  std::vector<ArrivalStep> steps;
  Matching matching;
  std::optional<DualCharges> charges;
};

inline Json run_to_json(const StochasticGraph& g, const RunRecord& r) {
  auto edge_ref = [&](EdgeId e) {
    return Json::array({g.offline_names()[g.edge(e).u], g.online_names()[g.edge(e).v]});
  };
  Json j;
  j["algorithm"] = r.algorithm;
  j["seed"] = r.seed;
  Json order = Json::array();
  for (std::size_t v : r.order.sequence) order.push_back(g.online_names()[v]);
  j["order"] = order;
  if (r.order.has_times()) j["times"] = r.order.times;
  Json probes = Json::array();
  for (const auto& p : r.probes) probes.push_back({{"edge", edge_ref(p.edge)}, {"active", p.active}});
  j["probes"] = probes;
  Json matching = Json::array();
  for (EdgeId e : r.matching.edges) matching.push_back(edge_ref(e));
  j["matching"] = matching;
  j["weight"] = r.matching.weight;
  if (r.charges) {
    Json alpha = Json::object();
    for (std::size_t u = 0; u < r.charges->alpha.size(); ++u) alpha[g.offline_names()[u]] = r.charges->alpha[u];
    Json phi = Json::array();
    for (const auto& [key, value] : r.charges->phi) {
      Json set = Json::array();
      for (std::size_t u = 0; u < g.num_offline(); ++u) {
        if (in_mask(key.second, u)) set.push_back(g.offline_names()[u]);
      }
      phi.push_back({{"v", g.online_names()[key.first]}, {"R", set}, {"phi", value}});
    }
    j["charges"] = {{"curve", to_string(r.charges->curve)}, {"F", r.charges->F}, {"alpha", alpha}, {"phi", phi}};
  }
  return j;
}

/// Replays a record against the graph. Returns a list of violations: probe
/// strings outside C_v, matches that were never active probes, and active
/// probes with both endpoints free that were left unmatched.
inline std::vector<std::string> validate_run(const StochasticGraph& g, const RunRecord& r) {
  std::vector<std::string> issues;
  std::vector<ProbeString> history(g.num_online());
  std::vector<bool> used_u(g.num_offline(), false), used_v(g.num_online(), false);
  std::set<EdgeId> matched_by_replay;
  const std::set<EdgeId> matching(r.matching.edges.begin(), r.matching.edges.end());
  for (const auto& p : r.probes) {
    if (p.edge >= g.num_edges()) {
      issues.push_back("probe of unknown edge");
      continue;
    }
    const Edge& e = g.edge(p.edge);
    history[e.v].push_back(p.edge);
    if (!admits(g.constraint(e.v), history[e.v])) {
      issues.push_back("probes at " + g.online_names()[e.v] + " leave the probing constraint");
    }
    if (p.active && !used_u[e.u] && !used_v[e.v]) {
      used_u[e.u] = used_v[e.v] = true;
      matched_by_replay.insert(p.edge);
      if (!matching.count(p.edge)) issues.push_back("commitment violated on edge " + std::to_string(p.edge));
    }
  }
  for (EdgeId e : matching) {
    if (!matched_by_replay.count(e)) issues.push_back("matched edge " + std::to_string(e) + " was not committed");
  }
  if (!is_matching(g, r.matching)) issues.push_back("output is not a matching");
  return issues;
}

// ---------------------------------------------------------------------------
// LP-guided random-order algorithm

/// When an arrival is skipped: as printed, arrival t (1-based) passes when
/// t < ⌊n/e⌋; the analysis rule passes every t < ⌈n/e⌉, i.e. t <= ⌊n/e⌋.
enum class PassRule { as_printed, analysis };

inline std::size_t pass_threshold(std::size_t n) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) / std::numbers::e));
}

inline bool passes(std::size_t t, std::size_t n, PassRule rule) {
  const std::size_t k = pass_threshold(n);
  return rule == PassRule::as_printed ? t < k : t <= k;
}

/// Solves the configuration LP of each arrived prefix once and replays it.
/// Not thread-safe; use one instance per worker.
class RomLpAlgorithm {
 public:
  struct Prefix {
    double objective = 0.0;
    std::vector<StringDistribution> by_online;  // indexed by online vertex of the full graph
  };

  explicit RomLpAlgorithm(const StochasticGraph& g, PassRule rule = PassRule::as_printed)
      : g_(g), rule_(rule) {
    if (g.num_online() > 64) throw CapExceeded("more than 64 online vertices");
  }

  PassRule rule() const { return rule_; }

  /// LP-config solution for G[U ∪ arrived].
  const Prefix& prefix(std::uint64_t arrived) {
    if (auto it = cache_.find(arrived); it != cache_.end()) return it->second;
    std::vector<std::size_t> keep;
    for (std::size_t v = 0; v < g_.num_online(); ++v) {
      if ((arrived >> v) & 1U) keep.push_back(v);
    }
    const InducedSubgraph sub = online_subgraph(g_, keep);
    const ConfigLp config = build_lp_config(sub.graph);
    const LpSolution sol = solve_lp(config.lp);
    if (sol.status != LpStatus::optimal) {
      throw InternalError(std::string("configuration LP is ") + to_string(sol.status));
    }
    Prefix p;
    p.objective = sol.objective_value;
    p.by_online.resize(g_.num_online());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      StringDistribution d = distribution_for(config, sol, i);
      d.online_vertex = keep[i];
      for (auto& s : d.strings) {
        for (EdgeId& e : s) e = sub.edge_map[e];
      }
      p.by_online[keep[i]] = std::move(d);
    }
    return cache_.emplace(arrived, std::move(p)).first->second;
  }

  RunRecord run(const ArrivalOrder& order, const World& world, Rng& rng) {
    RunRecord r;
    r.algorithm = "rom-lp";
    r.order = order;
    const std::size_t n = g_.num_online();
    OfflineMask free = full_mask(g_.num_offline());
    std::uint64_t arrived = 0;
    std::vector<EdgeId> matched;
    for (std::size_t t = 1; t <= order.sequence.size(); ++t) {
      const std::size_t v = order.sequence[t - 1];
      arrived |= std::uint64_t{1} << v;
      ArrivalStep step{v, free, free, false, std::nullopt};
      if (passes(t, n, rule_)) {
        step.passed = true;
        r.steps.push_back(step);
        continue;
      }
      const StringDistribution& d = prefix(arrived).by_online[v];
      const ProbeOutcome out = vertex_probe(g_, d, rng, &world);
      const ProbeString& s = d.strings[out.drawn];
      for (std::size_t i = 0; i < out.probes; ++i) r.probes.push_back({s[i], world[s[i]]});
      if (out.edge && in_mask(free, g_.edge(*out.edge).u)) {
        free &= ~(OfflineMask{1} << g_.edge(*out.edge).u);
        matched.push_back(*out.edge);
        step.matched = out.edge;
      }
      step.free_after = free;
      r.steps.push_back(step);
    }
    r.matching = make_matching(g_, matched);
    return r;
  }

 private:
  const StochasticGraph& g_;
  PassRule rule_;
  std::unordered_map<std::uint64_t, Prefix> cache_;
};

inline RunRecord run_rom_lp_algorithm(const StochasticGraph& g, const ArrivalOrder& order, Rng& rng,
                                      PassRule rule = PassRule::as_printed) {
  const World world = sample_world(g, rng);
  RomLpAlgorithm alg(g, rule);
  return alg.run(order, world, rng);
}

// ---------------------------------------------------------------------------
// Greedy-DP

/// Each arrival probes its optimal string against the currently free
/// offline vertices and stops at the first active edge. Not thread-safe.
class GreedyDp {
 public:
  explicit GreedyDp(const StochasticGraph& g) : g_(g), cache_(g) {}

  StarOptCache& star_cache() { return cache_; }

  /// With a curve, also records the dual charges; the order must then carry
  /// arrival times.
  RunRecord run(const ArrivalOrder& order, const World& world,
                std::optional<ChargeCurve> curve = std::nullopt) {
    RunRecord r;
    r.algorithm = "greedy-dp";
    r.order = order;
    if (curve) {
      if (!order.has_times()) throw ValidationError("charged run needs arrival times");
      DualCharges c;
      c.curve = *curve;
      c.F = charge_F(*curve);
      c.alpha.assign(g_.num_offline(), 0.0);
      r.charges = std::move(c);
    }
    OfflineMask free = full_mask(g_.num_offline());
    std::vector<EdgeId> matched;
    for (std::size_t v : order.sequence) {
      ArrivalStep step{v, free, free, false, std::nullopt};
      const StarPolicy& policy = cache_.get(v, free);
      for (EdgeId e : policy.probe_string) {
        r.probes.push_back({e, world[e]});
        if (!world[e]) continue;
        const Edge& ed = g_.edge(e);
        ensure(in_mask(free, ed.u), "greedy-dp probed a matched offline vertex");
        free &= ~(OfflineMask{1} << ed.u);
        matched.push_back(e);
        step.matched = e;
        if (r.charges) charge(*r.charges, v, step.free_before, ed, order.time_of(v));
        break;
      }
      step.free_after = free;
      r.steps.push_back(step);
    }
    r.matching = make_matching(g_, matched);
    return r;
  }

 private:
  void charge(DualCharges& c, std::size_t v, OfflineMask R, const Edge& e, double y) {
    const StarKey key{v, R & g_.neighbourhood(v)};
    const double opt = cache_.value(v, R);
    ensure(opt > 0.0, "positive charge against a zero star value");
    const double gy = charge_g(c.curve, y);
    c.alpha[e.u] += e.w * (1.0 - gy) / c.F;
    c.phi[key] += e.w * gy / (c.F * opt);
    c.star_value[key] = opt;
  }

  const StochasticGraph& g_;
  StarOptCache cache_;
};

inline RunRecord run_greedy_dp(const StochasticGraph& g, const ArrivalOrder& order, Rng& rng) {
  const World world = sample_world(g, rng);
  return GreedyDp(g).run(order, world);
}

inline RunRecord run_greedy_dp_charged(const StochasticGraph& g, const std::vector<double>& times,
                                       Rng& rng, ChargeCurve curve = ChargeCurve::exponential) {
  const World world = sample_world(g, rng);
  return GreedyDp(g).run(ArrivalOrder::from_times(times), world, curve);
}

// ---------------------------------------------------------------------------
// Greedy single-edge probing

inline void require_unit_patience(const StochasticGraph& g, const char* who) {
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    const auto* pat = std::get_if<Patience>(&g.constraint(v));
    if (!pat || pat->limit != 1) throw ValidationError(std::string(who) + ": unit patience required");
  }
}

/// Each arrival probes the free edge of largest w·p (smallest id on ties)
/// and matches it if active. Edges with w·p = 0 are not probed.
inline RunRecord run_greedy_probe(const StochasticGraph& g, const ArrivalOrder& order,
                                  const World& world) {
  require_unit_patience(g, "greedy-probe");
  RunRecord r;
  r.algorithm = "greedy-probe";
  r.order = order;
  OfflineMask free = full_mask(g.num_offline());
  std::vector<EdgeId> matched;
  for (std::size_t v : order.sequence) {
    ArrivalStep step{v, free, free, false, std::nullopt};
    std::optional<EdgeId> best;
    for (EdgeId e : g.online_edges(v)) {
      const Edge& ed = g.edge(e);
      if (!in_mask(free, ed.u) || ed.w * ed.p <= 0.0) continue;
      if (!best || ed.w * ed.p > g.edge(*best).w * g.edge(*best).p) best = e;
    }
    if (best) {
      r.probes.push_back({*best, world[*best]});
      if (world[*best]) {
        free &= ~(OfflineMask{1} << g.edge(*best).u);
        matched.push_back(*best);
        step.matched = best;
      }
    }
    step.free_after = free;
    r.steps.push_back(step);
  }
  r.matching = make_matching(g, matched);
  return r;
}

inline RunRecord run_greedy_probe(const StochasticGraph& g, const ArrivalOrder& order, Rng& rng) {
  return run_greedy_probe(g, order, sample_world(g, rng));
}

// ---------------------------------------------------------------------------
// Coupled runs with one online vertex deleted

struct CoupledRuns {
  std::size_t deleted = 0;
  RunRecord full;     // on G
  RunRecord reduced;  // on G without the deleted vertex, indices of G
  // Free offline set right after each online vertex is processed, indexed by
  // online vertex of G. The deleted vertex has no entry in `after_reduced`.
  std::vector<OfflineMask> after_full, after_reduced;

  /// Whether the free set on G is contained in the free set on the reduced
  /// graph after every shared arrival.
  bool contained() const {
    for (std::size_t v = 0; v < after_full.size(); ++v) {
      if (v == deleted) continue;
      if ((after_full[v] & ~after_reduced[v]) != 0) return false;
    }
    return true;
  }

  /// Arrival time of the vertex that takes u0 in the reduced run, or 1.
  double critical_time(const StochasticGraph& g, std::size_t u0) const {
    for (EdgeId e : reduced.matching.edges) {
      if (g.edge(e).u == u0) return reduced.order.time_of(g.edge(e).v);
    }
    return 1.0;
  }
};

/// Greedy-DP on G and on G with `v0` deleted, sharing edge states and
/// arrival times.
inline CoupledRuns coupled_deletion_run(const StochasticGraph& g, std::size_t v0, const World& world,
                                        const std::vector<double>& times) {
  if (v0 >= g.num_online()) throw ValidationError("coupled run: unknown online vertex");
  CoupledRuns out;
  out.deleted = v0;
  out.full = GreedyDp(g).run(ArrivalOrder::from_times(times), world);

  std::vector<std::size_t> keep;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    if (v != v0) keep.push_back(v);
  }
  const InducedSubgraph sub = online_subgraph(g, keep);
  World sub_world;
  for (EdgeId e : sub.edge_map) sub_world.active.push_back(world.active.at(e));
  std::vector<double> sub_times;
  for (std::size_t v : sub.online_map) sub_times.push_back(times.at(v));
  RunRecord reduced = GreedyDp(sub.graph).run(ArrivalOrder::from_times(sub_times), sub_world);

  // Back to the indices of G.
  for (auto& v : reduced.order.sequence) v = sub.online_map[v];
  reduced.order.times = times;
  for (auto& p : reduced.probes) p.edge = sub.edge_map[p.edge];
  std::vector<EdgeId> matched;
  for (EdgeId e : reduced.matching.edges) matched.push_back(sub.edge_map[e]);
  reduced.matching = make_matching(g, matched);
  for (auto& s : reduced.steps) {
    s.online_vertex = sub.online_map[s.online_vertex];
    if (s.matched) s.matched = sub.edge_map[*s.matched];
  }
  out.reduced = std::move(reduced);

  out.after_full.assign(g.num_online(), 0);
  out.after_reduced.assign(g.num_online(), 0);
  for (const auto& s : out.full.steps) out.after_full[s.online_vertex] = s.free_after;
  for (const auto& s : out.reduced.steps) out.after_reduced[s.online_vertex] = s.free_after;
  return out;
}

}  // namespace stochmatch
