#pragma once

// Exact and Monte Carlo evaluation of the online algorithms, ratio reports,
// random instance generation and the prefix-LP and availability checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "stochmatch/benchmarks.hpp"
#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/lp_builders.hpp"
#include "stochmatch/online.hpp"
#include "stochmatch/rng.hpp"

namespace stochmatch {

enum class Algorithm { rom_lp, greedy_dp, greedy_probe };
enum class OrderModel { rom, explicit_order, worst, y_times };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::rom_lp: return "rom-lp";
    case Algorithm::greedy_dp: return "greedy-dp";
    case Algorithm::greedy_probe: return "greedy-probe";
  }
  return "?";
}

inline const char* to_string(OrderModel m) {
  switch (m) {
    case OrderModel::rom: return "rom";
    case OrderModel::explicit_order: return "explicit";
    case OrderModel::worst: return "worst";
    case OrderModel::y_times: return "Y";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "rom-lp") return Algorithm::rom_lp;
  if (s == "greedy-dp") return Algorithm::greedy_dp;
  if (s == "greedy-probe") return Algorithm::greedy_probe;
  throw ValidationError("unknown algorithm '" + s + "'");
}

inline OrderModel parse_order_model(const std::string& s) {
  if (s == "rom") return OrderModel::rom;
  if (s == "explicit") return OrderModel::explicit_order;
  if (s == "worst") return OrderModel::worst;
  if (s == "Y") return OrderModel::y_times;
  throw ValidationError("unknown order model '" + s + "'");
}

/// Limits for exact evaluation.
inline constexpr std::size_t kMaxExactOnline = 6;
inline constexpr std::size_t kMaxExactWorldEdges = 20;

struct KahanSum {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// ---------------------------------------------------------------------------
// Runner: one per worker, holding the per-graph caches

class Runner {
 public:
  Runner(const StochasticGraph& g, PassRule rule = PassRule::as_printed) : g_(g), rule_(rule) {}

  const StochasticGraph& graph() const { return g_; }

  RomLpAlgorithm& rom_lp() {
    if (!rom_lp_) rom_lp_.emplace(g_, rule_);
    return *rom_lp_;
  }

  GreedyDp& greedy_dp() {
    if (!greedy_dp_) greedy_dp_.emplace(g_);
    return *greedy_dp_;
  }

  RunRecord run(Algorithm a, const ArrivalOrder& order, const World& world, Rng& rng) {
    switch (a) {
      case Algorithm::rom_lp: return rom_lp().run(order, world, rng);
      case Algorithm::greedy_dp: return greedy_dp().run(order, world);
      case Algorithm::greedy_probe: return run_greedy_probe(g_, order, world);
    }
    throw InternalError("unknown algorithm");
  }

  /// Exact expected weight for a fixed order. Each online vertex only
  /// probes its own edges, so edge states are integrated arrival by
  /// arrival and the value is memoized on (arrival index, free set).
  double expected_value(Algorithm a, const ArrivalOrder& order) {
    if (a == Algorithm::greedy_probe) require_unit_patience(g_, "greedy-probe");
    const std::size_t n = order.sequence.size();
    std::vector<std::uint64_t> arrived(n + 1, 0);
    for (std::size_t t = 1; t <= n; ++t) arrived[t] = arrived[t - 1] | (std::uint64_t{1} << order.sequence[t - 1]);
    std::vector<std::unordered_map<OfflineMask, double>> memo(n + 1);

    auto value = [&](auto&& self, std::size_t t, OfflineMask free) -> double {
      if (t > n) return 0.0;
      if (auto it = memo[t].find(free); it != memo[t].end()) return it->second;
      const std::size_t v = order.sequence[t - 1];
      // Expected value of probing `s` in order, committing when the
      // offline endpoint is free.
      auto probe = [&](const ProbeString& s) {
        double total = 0.0, alive = 1.0;
        for (EdgeId e : s) {
          const Edge& ed = g_.edge(e);
          if (ed.p > 0.0) {
            const double next = in_mask(free, ed.u)
                                    ? ed.w + self(self, t + 1, free & ~(OfflineMask{1} << ed.u))
                                    : self(self, t + 1, free);
            total += alive * ed.p * next;
          }
          alive *= 1.0 - ed.p;
          if (alive <= 0.0) break;
        }
        if (alive > 0.0) total += alive * self(self, t + 1, free);
        return total;
      };

      double out = 0.0;
      switch (a) {
        case Algorithm::rom_lp: {
          if (passes(t, g_.num_online(), rule_)) {
            out = self(self, t + 1, free);
            break;
          }
          const StringDistribution& d = rom_lp().prefix(arrived[t]).by_online[v];
          check_distribution(d);
          KahanSum acc;
          for (std::size_t i = 0; i < d.strings.size(); ++i) {
            if (d.mass[i] > 0.0) acc.add(d.mass[i] * probe(d.strings[i]));
          }
          out = acc.sum;
          break;
        }
        case Algorithm::greedy_dp:
          out = probe(greedy_dp().star_cache().get(v, free).probe_string);
          break;
        case Algorithm::greedy_probe: {
          std::optional<EdgeId> best;
          for (EdgeId e : g_.online_edges(v)) {
            const Edge& ed = g_.edge(e);
            if (!in_mask(free, ed.u) || ed.w * ed.p <= 0.0) continue;
            if (!best || ed.w * ed.p > g_.edge(*best).w * g_.edge(*best).p) best = e;
          }
          out = best ? probe({*best}) : self(self, t + 1, free);
          break;
        }
      }
      memo[t].emplace(free, out);
      return out;
    };
    return value(value, 1, full_mask(g_.num_offline()));
  }

 private:
  const StochasticGraph& g_;
  PassRule rule_;
  std::optional<RomLpAlgorithm> rom_lp_;
  std::optional<GreedyDp> greedy_dp_;
};

/// Calls f on every permutation of the online vertices, in lexicographic order.
inline void for_each_order(std::size_t n, const std::function<void(const ArrivalOrder&)>& f) {
  ArrivalOrder order = identity_order(n);
  do {
    f(order);
  } while (std::next_permutation(order.sequence.begin(), order.sequence.end()));
}

inline void check_exact_limits(const StochasticGraph& g, OrderModel m) {
  if (m != OrderModel::explicit_order && g.num_online() > kMaxExactOnline) {
    throw CapExceeded("exact evaluation over orders needs at most 6 online vertices");
  }
}

/// Exact expected weight under an order model. ROM and Y-times average
/// over all permutations; worst takes the minimum; explicit uses `order`.
inline double exact_expected_value(Algorithm a, const StochasticGraph& g, OrderModel m,
                                   const std::optional<ArrivalOrder>& order = std::nullopt,
                                   PassRule rule = PassRule::as_printed) {
  check_exact_limits(g, m);
  Runner runner(g, rule);
  if (m == OrderModel::explicit_order) {
    if (!order) throw ValidationError("explicit order model needs an order");
    return runner.expected_value(a, ArrivalOrder::permutation(order->sequence, g.num_online()));
  }
  KahanSum acc;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for_each_order(g.num_online(), [&](const ArrivalOrder& o) {
    const double value = runner.expected_value(a, o);
    acc.add(value);
    worst = std::min(worst, value);
    ++count;
  });
  return m == OrderModel::worst ? worst : acc.sum / static_cast<double>(count);
}

/// Reference evaluator: sums the run weight over every assignment of the
/// random edge states. Only for the deterministic greedy algorithms.
inline double exact_expected_value_by_worlds(Algorithm a, const StochasticGraph& g,
                                             const ArrivalOrder& order) {
  if (a == Algorithm::rom_lp) throw ValidationError("world enumeration needs a deterministic algorithm");
  std::vector<EdgeId> random_edges;
  World world;
  world.active.assign(g.num_edges(), 0);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const double p = g.edge(e).p;
    if (p >= 1.0) world.active[e] = 1;
    if (p > 0.0 && p < 1.0) random_edges.push_back(e);
  }
  if (random_edges.size() > kMaxExactWorldEdges) throw CapExceeded("too many random edges to enumerate");
  Runner runner(g);
  Rng unused(0);
  KahanSum acc;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << random_edges.size()); ++bits) {
    double prob = 1.0;
    for (std::size_t i = 0; i < random_edges.size(); ++i) {
      const bool on = (bits >> i) & 1U;
      world.active[random_edges[i]] = on ? 1 : 0;
      prob *= on ? g.edge(random_edges[i]).p : 1.0 - g.edge(random_edges[i]).p;
    }
    acc.add(prob * runner.run(a, order, world, unused).matching.weight);
  }
  return acc.sum;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
};

/// Welford accumulator.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  Estimate estimate() const { return {mean(), stderr_of_mean(), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

/// Runs `trials` independent trials across `threads` workers. Trial i uses
/// Rng(seed ^ i); `per_worker` builds worker state and `trial` maps
/// (state, index, rng) to a value. Values are reduced in trial order, so
/// the result does not depend on the worker count.
template <class MakeState, class Trial>
std::vector<double> parallel_trials(std::size_t trials, std::uint64_t seed, std::size_t threads,
                                    MakeState per_worker, Trial trial) {
  std::vector<double> values(trials, 0.0);
  threads = std::max<std::size_t>(1, std::min(threads, trials));
  auto work = [&](std::size_t begin, std::size_t end) {
    auto state = per_worker();
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(Rng::trial_seed(seed, i));
      values[i] = trial(state, i, rng);
    }
  };
  if (threads == 1) {
    work(0, trials);
    return values;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (trials + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk, end = std::min(trials, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return values;
}

inline Estimate summarize(const std::vector<double>& values) {
  RunningStats s;
  for (double v : values) s.add(v);
  return s.estimate();
}

struct MonteCarloOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  PassRule rule = PassRule::as_printed;
  std::optional<ArrivalOrder> order;                                  // explicit model
  std::function<void(std::size_t, const RunRecord&)> on_run;          // called from workers
};

/// Mean matched weight over independent trials. Each trial draws its
/// order (ROM: permutation; Y: arrival times), then edge states, then any
/// internal randomness, all from its own stream.
inline Estimate monte_carlo(Algorithm a, const StochasticGraph& g, OrderModel m,
                            const MonteCarloOptions& opt) {
  if (opt.trials == 0) throw ValidationError("monte_carlo: trials must be positive");
  if (m == OrderModel::worst) throw ValidationError("worst-case order is evaluated exactly only");
  if (m == OrderModel::explicit_order) {
    if (!opt.order) throw ValidationError("explicit order model needs an order");
    ArrivalOrder::permutation(opt.order->sequence, g.num_online());
  }
  const auto values = parallel_trials(
      opt.trials, opt.seed, opt.threads, [&] { return Runner(g, opt.rule); },
      [&](Runner& runner, std::size_t i, Rng& rng) {
        ArrivalOrder order;
        if (m == OrderModel::rom) order = random_permutation_order(g.num_online(), rng);
        if (m == OrderModel::y_times) order = random_time_order(g.num_online(), rng);
        if (m == OrderModel::explicit_order) order = *opt.order;
        const World world = sample_world(g, rng);
        RunRecord r = runner.run(a, order, world, rng);
        r.seed = Rng::trial_seed(opt.seed, i);
        if (opt.on_run) opt.on_run(i, r);
        return r.matching.weight;
      });
  return summarize(values);
}

// ---------------------------------------------------------------------------
// Benchmarks and ratio reports

enum class Benchmark { committal, noncommittal, lp_config, lp_dp, lp_dp_non, lp_std_unit, lp_std };

inline const char* to_string(Benchmark b) {
  switch (b) {
    case Benchmark::committal: return "committal";
    case Benchmark::noncommittal: return "noncommittal";
    case Benchmark::lp_config: return "lp-config";
    case Benchmark::lp_dp: return "lp-dp";
    case Benchmark::lp_dp_non: return "lp-dp-non";
    case Benchmark::lp_std_unit: return "lp-std-unit";
    case Benchmark::lp_std: return "lp-std";
  }
  return "?";
}

inline Benchmark parse_benchmark(const std::string& s) {
  for (Benchmark b : {Benchmark::committal, Benchmark::noncommittal, Benchmark::lp_config, Benchmark::lp_dp,
                      Benchmark::lp_dp_non, Benchmark::lp_std_unit, Benchmark::lp_std}) {
    if (s == to_string(b)) return b;
  }
  throw ValidationError("unknown benchmark '" + s + "'");
}

inline double lp_optimum(const LinearProgram& lp) {
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) throw InternalError(std::string("LP is ") + to_string(sol.status));
  return sol.objective_value;
}

inline double benchmark_value(const StochasticGraph& g, Benchmark b) {
  switch (b) {
    case Benchmark::committal: return committal_opt(g);
    case Benchmark::noncommittal: return noncommittal_opt(g);
    case Benchmark::lp_config: return lp_optimum(build_lp_config(g).lp);
    case Benchmark::lp_dp: return lp_optimum(build_lp_dp(g));
    case Benchmark::lp_dp_non: return lp_optimum(build_lp_dp_non(g));
    case Benchmark::lp_std_unit: return lp_optimum(build_lp_std_unit(g));
    case Benchmark::lp_std: return lp_optimum(build_lp_std(g));
  }
  throw InternalError("unknown benchmark");
}

/// Competitive-ratio target for an algorithm under an order model:
/// 1/2 for the greedy algorithms in any order, 1 − 1/e for them in random
/// order, and 1/e − 1/n for the LP-guided algorithm in random order.
inline double ratio_threshold(Algorithm a, OrderModel m, std::size_t n) {
  if (a == Algorithm::rom_lp) return 1.0 / std::numbers::e - 1.0 / static_cast<double>(std::max<std::size_t>(n, 1));
  if (m == OrderModel::rom || m == OrderModel::y_times) return 1.0 - 1.0 / std::numbers::e;
  return 0.5;
}

struct RatioReport {
  std::string instance_id;
  Algorithm algorithm = Algorithm::greedy_dp;
  OrderModel order_model = OrderModel::rom;
  std::size_t trials = 0;  // 0 for exact values
  double value = 0.0;
  double stderr_ = 0.0;
  Benchmark benchmark = Benchmark::committal;
  double benchmark_value = 0.0;
  double ratio = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Fills ratio and pass: exact values need ratio >= threshold − 1e-9,
/// estimates need value >= threshold·benchmark − 3σ.
inline void finalize(RatioReport& r) {
  r.ratio = r.benchmark_value > 0.0 ? r.value / r.benchmark_value : 1.0;
  if (r.trials == 0) {
    r.pass = r.ratio >= r.threshold - 1e-9;
  } else {
    r.pass = r.value >= r.threshold * r.benchmark_value - 3.0 * r.stderr_;
  }
}

inline const char* kCsvHeader =
    "instance_id,algorithm,order_model,trials,value,stderr,benchmark,benchmark_value,ratio,threshold,pass";

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

inline std::string to_csv_row(const RatioReport& r) {
  std::ostringstream os;
  os << r.instance_id << ',' << to_string(r.algorithm) << ',' << to_string(r.order_model) << ','
     << r.trials << ',' << fmt(r.value) << ',' << fmt(r.stderr_) << ',' << to_string(r.benchmark) << ','
     << fmt(r.benchmark_value) << ',' << fmt(r.ratio) << ',' << fmt(r.threshold) << ','
     << (r.pass ? "true" : "false");
  return os.str();
}

inline Json to_json(const RatioReport& r) {
  return {{"instance_id", r.instance_id}, {"algorithm", to_string(r.algorithm)},
          {"order_model", to_string(r.order_model)}, {"trials", r.trials}, {"value", r.value},
          {"stderr", r.stderr_}, {"benchmark", to_string(r.benchmark)},
          {"benchmark_value", r.benchmark_value}, {"ratio", r.ratio}, {"threshold", r.threshold},
          {"pass", r.pass}};
}

/// Exact minimum over all arrival orders of E[w(M)] / benchmark.
inline double worst_order_ratio(Algorithm a, const StochasticGraph& g, double benchmark) {
  const double value = exact_expected_value(a, g, OrderModel::worst);
  return benchmark > 0.0 ? value / benchmark : 1.0;
}

/// Average over arrival orders of E[w(M)] / benchmark: exact up to 6
/// online vertices, otherwise a Monte Carlo estimate with `opt`.
inline double rom_ratio(Algorithm a, const StochasticGraph& g, double benchmark,
                        const MonteCarloOptions& opt = {}) {
  const double value = g.num_online() <= kMaxExactOnline
                           ? exact_expected_value(a, g, OrderModel::rom, std::nullopt, opt.rule)
                           : monte_carlo(a, g, OrderModel::rom, opt).mean;
  return benchmark > 0.0 ? value / benchmark : 1.0;
}

// ---------------------------------------------------------------------------
// Instance generation

enum class ProbabilityRegime { uniform, vanishing };

struct GeneratorParams {
  std::size_t num_offline = 3;
  std::size_t num_online = 3;
  double edge_density = 1.0;      // chance that each pair is an edge
  std::size_t max_degree = 0;     // per online vertex; 0 for no cap
  std::size_t patience_min = 1;
  std::size_t patience_max = 1;
  double weight_min = 1.0;
  double weight_max = 1.0;
  ProbabilityRegime regime = ProbabilityRegime::uniform;
  double p_min = 0.0;
  double p_max = 1.0;
  bool vertex_weighted = false;
  /// Vertex weights only: at each online vertex, larger offline weight
  /// gets larger edge probability.
  bool align_probabilities = false;
  std::uint64_t seed = 0;
};

inline StochasticGraph generate_random_instance(const GeneratorParams& params) {
  if (params.num_offline > kMaxOffline) throw ValidationError("generator: too many offline vertices");
  if (params.patience_min > params.patience_max || params.weight_min > params.weight_max ||
      params.p_min > params.p_max || params.p_min < 0.0 || params.p_max > 1.0 ||
      params.edge_density < 0.0 || params.edge_density > 1.0 || params.weight_min < 0.0) {
    throw ValidationError("generator: invalid parameter ranges");
  }
  Rng rng(params.seed);
  std::vector<std::string> offline, online;
  for (std::size_t u = 0; u < params.num_offline; ++u) offline.push_back("u" + std::to_string(u + 1));
  for (std::size_t v = 0; v < params.num_online; ++v) online.push_back("v" + std::to_string(v + 1));
  auto weight = [&] { return rng.uniform(params.weight_min, params.weight_max); };
  auto probability = [&] {
    if (params.regime == ProbabilityRegime::vanishing) {
      return rng.uniform(0.0, 1.0 / static_cast<double>(std::max<std::size_t>(params.num_offline, 1)));
    }
    return rng.uniform(params.p_min, params.p_max);
  };

  std::vector<double> vertex_weights;
  if (params.vertex_weighted) {
    for (std::size_t u = 0; u < params.num_offline; ++u) vertex_weights.push_back(weight());
  }
  std::vector<Edge> edges;
  std::vector<ConstraintSpec> constraints;
  for (std::size_t v = 0; v < params.num_online; ++v) {
    std::vector<std::size_t> nbrs;
    for (std::size_t u = 0; u < params.num_offline; ++u) {
      if (rng.uniform() < params.edge_density) nbrs.push_back(u);
    }
    if (params.max_degree > 0) {
      while (nbrs.size() > params.max_degree) nbrs.erase(nbrs.begin() + static_cast<std::ptrdiff_t>(rng.below(nbrs.size())));
    }
    std::vector<double> ps;
    for (std::size_t i = 0; i < nbrs.size(); ++i) ps.push_back(probability());
    if (params.vertex_weighted && params.align_probabilities) {
      std::sort(ps.begin(), ps.end());
      std::vector<std::size_t> by_weight = nbrs;
      std::stable_sort(by_weight.begin(), by_weight.end(),
                       [&](std::size_t a, std::size_t b) { return vertex_weights[a] < vertex_weights[b]; });
      nbrs = by_weight;
    }
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const std::size_t u = nbrs[i];
      edges.push_back({u, v, ps[i], params.vertex_weighted ? vertex_weights[u] : weight()});
    }
    const std::size_t span = params.patience_max - params.patience_min + 1;
    constraints.push_back(Patience{params.patience_min + static_cast<std::size_t>(rng.below(span))});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.v != b.v ? a.v < b.v : a.u < b.u;
  });
  if (params.vertex_weighted) {
    return StochasticGraph(std::move(offline), std::move(online), std::move(edges), std::move(constraints),
                           WeightMode::vertex, std::move(vertex_weights));
  }
  return StochasticGraph(std::move(offline), std::move(online), std::move(edges), std::move(constraints));
}

// ---------------------------------------------------------------------------
// Prefix LP and availability checks

struct SubgraphCheck {
  std::size_t t = 0;
  std::size_t n = 0;
  Estimate prefix_value;   // LPOPT of G[U ∪ S] over uniform t-subsets S
  double full_value = 0.0; // LPOPT of G
  double bound = 0.0;      // (t/n)·full_value
  bool pass = false;       // prefix mean >= bound − 3σ
};

/// Samples uniform t-subsets of online vertices and compares the mean LP
/// value of the induced graphs to (t/n)·LPOPT(G).
inline SubgraphCheck subgraph_lemma_check(const StochasticGraph& g, std::size_t t, std::size_t samples,
                                          std::uint64_t seed) {
  const std::size_t n = g.num_online();
  if (t > n) throw ValidationError("subgraph check: t exceeds the number of online vertices");
  if (samples == 0) throw ValidationError("subgraph check: samples must be positive");
  RomLpAlgorithm lps(g);
  SubgraphCheck out;
  out.t = t;
  out.n = n;
  out.full_value = lps.prefix(n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1).objective;
  out.bound = n == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(n) * out.full_value;
  RunningStats stats;
  std::vector<std::size_t> ids(n);
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(Rng::trial_seed(seed, s));
    for (std::size_t v = 0; v < n; ++v) ids[v] = v;
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < t; ++i) {
      std::swap(ids[i], ids[i + rng.below(n - i)]);
      mask |= std::uint64_t{1} << ids[i];
    }
    stats.add(lps.prefix(mask).objective);
  }
  out.prefix_value = stats.estimate();
  out.pass = out.prefix_value.mean >= out.bound - 3.0 * out.prefix_value.stderr_ - 1e-9;
  return out;
}

struct AvailabilityRow {
  std::size_t t = 0;
  std::size_t commits = 0;   // trials in which arrival t's probing returned an edge
  double frequency = 0.0;    // share of those whose offline endpoint was still free
  double stderr_ = 0.0;
  double bound = 0.0;        // ⌊n/e⌋/(t−1)
  bool pass = false;
};

/// For each t >= max(⌈n/e⌉, 2), the empirical chance that the offline
/// endpoint returned at arrival t is still free, under the analysis pass
/// rule and random order. This is the marginal over (V_t, v_t) of the
/// per-prefix statement, so it is implied by it but weaker.
inline std::vector<AvailabilityRow> availability_profile(const StochasticGraph& g, std::size_t trials,
                                                         std::uint64_t seed, std::size_t threads = 1) {
  const std::size_t n = g.num_online();
  const std::size_t k = pass_threshold(n);
  std::vector<AvailabilityRow> rows;
  if (n == 0) return rows;
  const std::size_t first = std::max<std::size_t>(k + 1, 2);
  // Per trial, per t: 0 no commit, 1 commit to a taken vertex, 2 commit to a free one.
  std::vector<std::vector<char>> outcomes(trials);
  parallel_trials(
      trials, seed, threads, [&] { return RomLpAlgorithm(g, PassRule::analysis); },
      [&](RomLpAlgorithm& alg, std::size_t i, Rng& rng) {
        const ArrivalOrder order = random_permutation_order(n, rng);
        const World world = sample_world(g, rng);
        const RunRecord r = alg.run(order, world, rng);
        std::vector<char> out(n + 1, 0);
        for (std::size_t t = 1; t <= n; ++t) {
          const ArrivalStep& s = r.steps[t - 1];
          if (s.passed) continue;
          // The returned edge is the last probe of this arrival if it was active.
          std::optional<EdgeId> returned;
          for (const auto& p : r.probes) {
            if (g.edge(p.edge).v == s.online_vertex && p.active) returned = p.edge;
          }
          if (returned) out[t] = in_mask(s.free_before, g.edge(*returned).u) ? 2 : 1;
        }
        outcomes[i] = std::move(out);
        return 0.0;
      });
  for (std::size_t t = first; t <= n; ++t) {
    RunningStats stats;
    for (const auto& o : outcomes) {
      if (o[t] != 0) stats.add(o[t] == 2 ? 1.0 : 0.0);
    }
    AvailabilityRow row;
    row.t = t;
    row.commits = stats.count();
    row.frequency = stats.count() ? stats.mean() : 1.0;
    row.stderr_ = stats.stderr_of_mean();
    row.bound = static_cast<double>(k) / static_cast<double>(t - 1);
    row.pass = stats.count() == 0 || row.frequency >= row.bound - 3.0 * row.stderr_;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stochmatch
