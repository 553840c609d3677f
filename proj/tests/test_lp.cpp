#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "stochmatch/benchmarks.hpp"
#include "stochmatch/cases.hpp"
#include "stochmatch/harness.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/lp_builders.hpp"

using namespace stochmatch;

namespace {

LinearProgram two_by_two() {
  LinearProgram lp;
  lp.add_variable("x", "", 1.0);
  lp.add_variable("y", "", 1.0);
  lp.add_row("a", {{0, 1.0}, {1, 2.0}}, Relation::less_equal, 4.0);
  lp.add_row("b", {{0, 3.0}, {1, 1.0}}, Relation::less_equal, 6.0);
  return lp;
}

// Random bounded LP with a mix of row kinds. Every variable is capped.
LinearProgram random_lp(std::uint64_t seed) {
  Rng rng(seed);
  LinearProgram lp;
  const std::size_t n = 2 + rng.below(3), m = 1 + rng.below(3);
  for (std::size_t j = 0; j < n; ++j) lp.add_variable("x" + std::to_string(j), "", rng.uniform(-1.0, 3.0));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<LpTerm> terms;
    for (std::size_t j = 0; j < n; ++j) {
      if (rng.uniform() < 0.7) terms.push_back({j, rng.uniform(-1.0, 2.0)});
    }
    const bool eq = rng.uniform() < 0.25;
    lp.add_row("r" + std::to_string(i), terms, eq ? Relation::equal : Relation::less_equal,
               rng.uniform(-1.0, 3.0));
  }
  for (std::size_t j = 0; j < n; ++j) lp.add_row("cap" + std::to_string(j), {{j, 1.0}}, Relation::less_equal, 2.0);
  return lp;
}

GeneratorParams small_params(std::uint64_t seed) {
  GeneratorParams p;
  p.num_offline = 3;
  p.num_online = 3;
  p.edge_density = 0.7;
  p.patience_min = 1;
  p.patience_max = 2;
  p.weight_min = 0.5;
  p.weight_max = 5.0;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(Simplex, TextbookOptimum) {
  const LpSolution s = solve_lp(two_by_two());
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.objective_value, 2.8, 1e-12);
  EXPECT_NEAR(s.values[0], 1.6, 1e-12);
  EXPECT_NEAR(s.values[1], 1.2, 1e-12);
  EXPECT_LE(s.max_violation, 1e-12);
  EXPECT_NEAR(s.assignment(two_by_two()).at("y"), 1.2, 1e-12);
}

TEST(Simplex, EqualityAndNegativeRightHandSide) {
  LinearProgram lp;
  lp.add_variable("x", "", -1.0);
  lp.add_variable("y", "", -1.0);
  lp.add_row("sum", {{0, 1.0}, {1, 1.0}}, Relation::equal, 3.0);
  lp.add_row("floor", {{0, -1.0}}, Relation::less_equal, -1.0);  // x >= 1
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.objective_value, -3.0, 1e-12);
  EXPECT_GE(s.values[0], 1.0 - 1e-12);
  EXPECT_NEAR(s.values[0] + s.values[1], 3.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  LinearProgram infeasible;
  infeasible.add_variable("x", "", 1.0);
  infeasible.add_row("neg", {{0, 1.0}}, Relation::equal, -1.0);
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::infeasible);

  LinearProgram clash;
  clash.add_variable("x", "", 1.0);
  clash.add_row("hi", {{0, 1.0}}, Relation::less_equal, 1.0);
  clash.add_row("lo", {{0, -1.0}}, Relation::less_equal, -2.0);
  EXPECT_EQ(solve_lp(clash).status, LpStatus::infeasible);

  LinearProgram unbounded;
  unbounded.add_variable("x", "", 1.0);
  unbounded.add_variable("y", "", 0.0);
  unbounded.add_row("r", {{0, 1.0}, {1, -1.0}}, Relation::less_equal, 1.0);
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::unbounded);
}

TEST(Simplex, BlandRuleSurvivesTheCyclingExample) {
  // Beale's example cycles under the largest-coefficient rule.
  LinearProgram lp;
  lp.add_variable("x1", "", 0.75);
  lp.add_variable("x2", "", -150.0);
  lp.add_variable("x3", "", 0.02);
  lp.add_variable("x4", "", -6.0);
  lp.add_row("a", {{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, Relation::less_equal, 0.0);
  lp.add_row("b", {{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, Relation::less_equal, 0.0);
  lp.add_row("c", {{2, 1.0}}, Relation::less_equal, 1.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.objective_value, 0.05, 1e-12);
}

TEST(Simplex, RedundantEqualities) {
  LinearProgram lp;
  lp.add_variable("x", "", 1.0);
  lp.add_variable("y", "", 2.0);
  lp.add_row("e1", {{0, 1.0}, {1, 1.0}}, Relation::equal, 1.0);
  lp.add_row("e2", {{0, 2.0}, {1, 2.0}}, Relation::equal, 2.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-12);
}

TEST(Simplex, AgreesWithVertexEnumeration) {
  std::size_t optimal = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const LinearProgram lp = random_lp(seed);
    const LpSolution s = solve_lp(lp);
    const auto ref = oracle::lp_by_vertices(lp);
    if (!ref) {
      EXPECT_EQ(s.status, LpStatus::infeasible) << "seed " << seed;
      continue;
    }
    ASSERT_EQ(s.status, LpStatus::optimal) << "seed " << seed;
    EXPECT_NEAR(s.objective_value, *ref, 1e-8) << "seed " << seed;
    EXPECT_LE(s.max_violation, 1e-9);
    ++optimal;
  }
  EXPECT_GT(optimal, 100u);
}

TEST(Simplex, CplexText) {
  std::ostringstream os;
  write_cplex_lp(two_by_two(), os);
  const std::string text = os.str();
  EXPECT_NE(text.find("Maximize\n obj: 1 x + 1 y"), std::string::npos);
  EXPECT_NE(text.find(" a: 1 x + 2 y <= 4"), std::string::npos);
  EXPECT_NE(text.find("End"), std::string::npos);
}

TEST(Builders, CommitmentGapValues) {
  const StochasticGraph g = cases::commitment_gap();
  const ConfigLp config = build_lp_config(g);
  EXPECT_EQ(config.lp.num_variables(), 10u);  // 1 + 3 + 6 strings
  EXPECT_EQ(config.lp.variables()[0].name, "x.v.empty");
  EXPECT_EQ(config.lp.variables()[0].tag, "x_v(string)");
  EXPECT_NEAR(lp_optimum(config.lp), 3.36, 1e-9);
  EXPECT_NEAR(lp_optimum(build_lp_dp(g)), 3.36, 1e-9);
  EXPECT_NEAR(lp_optimum(build_lp_dp_non(g)), 3.924, 1e-9);
  const LinearProgram std_lp = build_lp_std(g);
  EXPECT_NEAR(lp_optimum(std_lp), *oracle::lp_by_vertices(std_lp), 1e-9);
}

TEST(Builders, SingleProbeStar) {
  const StochasticGraph g = cases::single_probe_star(3);
  EXPECT_NEAR(lp_optimum(build_lp_config(g).lp), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(lp_optimum(build_lp_std_unit(g)), 1.0 / 3.0, 1e-12);
}

TEST(Builders, EdgeLpsRejectOtherConstraints) {
  EXPECT_THROW(build_lp_std_unit(cases::commitment_gap()), ValidationError);
  Budget b;
  b.budget = 1.0;
  b.costs[0] = 1.0;
  const StochasticGraph g({"a"}, {"x"}, {{0, 0, 0.5, 1.0}}, {b});
  EXPECT_THROW(build_lp_std(g), ValidationError);
  EXPECT_NO_THROW(build_lp_config(g));
}

TEST(Builders, ConfigTruncationIsAnError) {
  EXPECT_THROW(build_lp_config(cases::commitment_gap(), 3), CapExceeded);
}

TEST(Builders, StarLpsNeedSmallOfflineSide) {
  std::vector<std::string> us;
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < 16; ++u) {
    us.push_back("u" + std::to_string(u));
    edges.push_back({u, 0, 0.5, 1.0});
  }
  const StochasticGraph g(us, {"v"}, edges, {Patience{1}});
  EXPECT_THROW(build_lp_dp(g), CapExceeded);
}

TEST(Builders, EdgeMarginalsRespectMatchRows) {
  const StochasticGraph g = generate_random_instance(small_params(4));
  const ConfigLp config = build_lp_config(g);
  const LpSolution s = solve_lp(config.lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  const auto x = edge_marginals_from_config_solution(g, config, s);
  double objective = 0.0;
  for (std::size_t u = 0; u < g.num_offline(); ++u) {
    double load = 0.0;
    for (EdgeId e : g.offline_edges(u)) load += g.edge(e).p * x[e];
    EXPECT_LE(load, 1.0 + 1e-9);
  }
  for (EdgeId e = 0; e < g.num_edges(); ++e) objective += g.edge(e).w * g.edge(e).p * x[e];
  EXPECT_NEAR(objective, s.objective_value, 1e-9);
  EXPECT_THROW(edge_marginals_from_config_solution(g, config, LpSolution{}), ValidationError);
}

TEST(Builders, StarTablesCoverNeighbourhoodSubsets) {
  const StochasticGraph g = generate_random_instance(small_params(9));
  const StarValueTable t = compute_star_values(g);
  std::size_t expected = 0;
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    expected += std::size_t{1} << g.online_edges(v).size();
  }
  EXPECT_EQ(t.size(), expected);
  for (const auto& [key, value] : t) {
    EXPECT_NEAR(value, oracle::best_star(g, key.first, key.second), 1e-12);
  }
  const StarValueTable non = compute_noncommittal_star_values(g);
  for (const auto& [key, value] : non) EXPECT_GE(value, t.at(key) - 1e-12);
}

TEST(Relaxations, OrderingOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const StochasticGraph g = generate_random_instance(small_params(seed));
    const double committal = committal_opt(g);
    const double config = lp_optimum(build_lp_config(g).lp);
    const double dp = lp_optimum(build_lp_dp(g));
    const double std_lp = lp_optimum(build_lp_std(g));
    const double non = noncommittal_opt(g);
    const double dp_non = lp_optimum(build_lp_dp_non(g));
    EXPECT_LE(committal, config + 1e-7) << seed;
    EXPECT_LE(committal, dp + 1e-7) << seed;
    EXPECT_LE(config, dp + 1e-7) << seed;
    EXPECT_LE(config, std_lp + 1e-7) << seed;
    EXPECT_LE(non, dp_non + 1e-7) << seed;
    EXPECT_LE(dp, dp_non + 1e-7) << seed;
  }
}

TEST(Relaxations, ConfigValueGrowsWithOnlineVertices) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const StochasticGraph g = generate_random_instance(small_params(seed + 50));
    const double full = lp_optimum(build_lp_config(g).lp);
    for (std::size_t drop = 0; drop < g.num_online(); ++drop) {
      std::vector<std::size_t> keep;
      for (std::size_t v = 0; v < g.num_online(); ++v) {
        if (v != drop) keep.push_back(v);
      }
      const double part = lp_optimum(build_lp_config(online_subgraph(g, keep).graph).lp);
      EXPECT_LE(part, full + 1e-9) << seed;
    }
  }
}
