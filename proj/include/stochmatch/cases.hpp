#pragma once

// Small fixed instances with known exact answers, and the reproduction
// checks built on them.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "stochmatch/benchmarks.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/harness.hpp"
#include "stochmatch/io.hpp"
#include "stochmatch/lp_builders.hpp"
#include "stochmatch/online.hpp"
#include "stochmatch/star_opt.hpp"

namespace stochmatch::cases {

// One online vertex with patience 2 over three offline vertices. The
// committal optimum probes u2 then u1 (3.36); a non-committal prober can
// gamble on the unlikely heavy edge first and do better (3.924).
inline const char* kCommitmentGap = R"({
  "offline": ["u1", "u2", "u3"],
  "online": ["v"],
  "weight_mode": "vertex",
  "vertex_weights": {"u1": 3, "u2": 4, "u3": 98},
  "edges": [
    {"u": "u1", "v": "v", "p": 0.8},
    {"u": "u2", "v": "v", "p": 0.6},
    {"u": "u3", "v": "v", "p": 0.01}
  ],
  "constraints": {"v": {"kind": "patience", "l": 2}}
})";

inline constexpr double kCommitmentGapCommittal = 3.36;
inline constexpr double kCommitmentGapNoncommittal = 3.924;
inline constexpr double kCommitmentGapRatio = 0.856269;

inline StochasticGraph commitment_gap() { return parse_instance(std::string(kCommitmentGap)); }

/// One online vertex with patience 2 whose optimal probe order is not a
/// fixed ranking: with every offline vertex free it probes u1 then u2, and
/// once u2 is gone it switches to u3 then u4. Requires 0 < eps <= 1/12.
inline StochasticGraph unrankable_star(double eps = 0.08) {
  return StochasticGraph::with_vertex_weights(
      {"u1", "u2", "u3", "u4"}, {"v"}, {1.0 + eps, 1.0 + eps / 2.0, 1.0, 1.0},
      {{0, 0, 1.0 / 3.0, 0.0}, {1, 0, 1.0, 0.0}, {2, 0, 0.5, 0.0}, {3, 0, 2.0 / 3.0, 0.0}},
      {Patience{2}});
}

/// The star above plus an earlier online vertex w0 that always takes u2.
/// Deleting w0 changes which offline vertices the star vertex leaves free.
inline StochasticGraph unrankable_coupling_witness(double eps = 0.08) {
  return StochasticGraph::with_vertex_weights(
      {"u1", "u2", "u3", "u4"}, {"w0", "v"}, {1.0 + eps, 1.0 + eps / 2.0, 1.0, 1.0},
      {{1, 0, 1.0, 0.0},
       {0, 1, 1.0 / 3.0, 0.0}, {1, 1, 1.0, 0.0}, {2, 1, 0.5, 0.0}, {3, 1, 2.0 / 3.0, 0.0}},
      {Patience{1}, Patience{2}});
}

/// Edge states and arrival times under which the witness breaks the
/// free-set containment: u1 active at v, u3 and u4 inactive.
inline World unrankable_coupling_world() { return World{{1, 1, 0, 0, 0}}; }
inline std::vector<double> unrankable_coupling_times() { return {0.2, 0.6}; }

/// One unit-patience online vertex and n unweighted offline vertices, each
/// edge present with probability 1/n. Any prober gets at most 1/n, while
/// the expected maximum matching is 1 − (1 − 1/n)^n.
inline StochasticGraph single_probe_star(std::size_t n = 3) {
  std::vector<std::string> offline;
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    offline.push_back("u" + std::to_string(u + 1));
    edges.push_back({u, 0, 1.0 / static_cast<double>(n), 1.0});
  }
  return StochasticGraph(std::move(offline), {"v"}, std::move(edges), {Patience{1}});
}

/// Deterministic edges, unit weights: v1 sees u1 and u2, v2 sees only u1.
/// If v1 arrives first it takes u1 and v2 is left empty, so the worst
/// order gets exactly half of the optimum.
inline StochasticGraph greedy_half_tight() {
  return StochasticGraph::with_vertex_weights(
      {"u1", "u2"}, {"v1", "v2"}, {1.0, 1.0},
      {{0, 0, 1.0, 0.0}, {1, 0, 1.0, 0.0}, {0, 1, 1.0, 0.0}}, {Patience{1}, Patience{1}});
}

// ---------------------------------------------------------------------------
// Reproduction checks

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline std::string probe_names(const StochasticGraph& g, const ProbeString& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += "(" + g.offline_names()[g.edge(s[i]).u] + "," + g.online_names()[g.edge(s[i]).v] + ")";
  }
  return out + ")";
}

inline bool commitment_gap_case(std::ostream& os) {
  const StochasticGraph g = commitment_gap();
  const double committal = committal_opt(g);
  const double non = noncommittal_opt(g);
  const double ratio = committal / non;
  const bool pass = near(committal, kCommitmentGapCommittal, 1e-9) &&
                    near(non, kCommitmentGapNoncommittal, 1e-9) && near(ratio, kCommitmentGapRatio, 1e-5);
  os << "committal " << fmt(committal) << "\nnoncommittal " << fmt(non) << "\nratio " << fmt(ratio) << ' '
     << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

inline bool unrankable_star_case(std::ostream& os) {
  const StochasticGraph g = unrankable_star();
  const OfflineMask all = full_mask(4);
  const OfflineMask without_u2 = all & ~OfflineMask{2};
  const StarPolicy a = dp_opt(g, 0, all);
  const StarPolicy b = dp_opt(g, 0, without_u2);
  const bool pass = a.probe_string == ProbeString{0, 1} && b.probe_string == ProbeString{2, 3};
  os << "R=U          " << probe_names(g, a.probe_string) << " value " << fmt(a.value) << '\n'
     << "R=U\\{u2}     " << probe_names(g, b.probe_string) << " value " << fmt(b.value) << '\n'
     << "rankable " << (verify_rankable(g, 0) ? "yes" : "no") << '\n'
     << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

inline bool single_probe_case(std::ostream& os) {
  const StochasticGraph g = single_probe_star(3);
  const double committal = committal_opt(g);
  const double lp = lp_optimum(build_lp_config(g).lp);
  const double matching = 1.0 - std::pow(2.0 / 3.0, 3.0);
  const bool pass = near(committal, 1.0 / 3.0, 1e-9) && near(lp, 1.0 / 3.0, 1e-9);
  os << "committal " << fmt(committal) << "\nlp-config " << fmt(lp) << "\nexpected max matching "
     << fmt(matching) << '\n' << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

/// Runs Greedy-DP with charges on random arrival times and checks that the
/// matched weight equals the scaled dual objective on every run.
inline bool charging_identity_case(std::ostream& os, std::uint64_t seed = 0, std::size_t runs = 1000) {
  GeneratorParams params;
  params.num_offline = 4;
  params.num_online = 4;
  params.edge_density = 0.8;
  params.patience_min = 1;
  params.patience_max = 2;
  params.weight_min = 1.0;
  params.weight_max = 5.0;
  params.vertex_weighted = true;
  params.seed = seed;
  const StochasticGraph g = generate_random_instance(params);
  GreedyDp alg(g);
  double worst = 0.0;
  for (std::size_t i = 0; i < runs; ++i) {
    Rng rng(Rng::trial_seed(seed, i));
    const auto times = draw_arrival_times(g.num_online(), rng);
    const World world = sample_world(g, rng);
    for (ChargeCurve curve : {ChargeCurve::exponential, ChargeCurve::half}) {
      const RunRecord r = alg.run(ArrivalOrder::from_times(times), world, curve);
      worst = std::max(worst, std::abs(r.matching.weight - r.charges->dual_objective()));
    }
  }
  const bool pass = worst <= 1e-9;
  os << "runs " << runs << "\nmax |w(M) - F*(sum alpha + sum OPT*phi)| " << worst << '\n'
     << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

inline const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names{"commitment-gap", "unrankable-star", "single-probe",
                                              "charging-identity"};
  return names;
}

/// Accepts the descriptive names above and the short external ids.
inline std::string canonical_case(const std::string& name) {
  if (name == "propA1") return "commitment-gap";
  if (name == "example41") return "unrankable-star";
  if (name == "footnote1") return "single-probe";
  return name;
}

inline bool run_case(const std::string& name, std::ostream& os, std::uint64_t seed = 0) {
  const std::string c = canonical_case(name);
  if (c == "commitment-gap") return commitment_gap_case(os);
  if (c == "unrankable-star") return unrankable_star_case(os);
  if (c == "single-probe") return single_probe_case(os);
  if (c == "charging-identity") return charging_identity_case(os, seed);
  throw ValidationError("unknown case '" + name + "'");
}

}  // namespace stochmatch::cases
