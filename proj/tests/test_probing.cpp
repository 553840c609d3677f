#include <gtest/gtest.h>

#include <cstdlib>

#include "oracles.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/harness.hpp"
#include "stochmatch/probing.hpp"

using namespace stochmatch;

namespace {

// One online vertex over `n` offline vertices with the given constraint.
StochasticGraph star(std::size_t n, ConstraintSpec c) {
  std::vector<std::string> us;
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    us.push_back("u" + std::to_string(u));
    edges.push_back({u, 0, 0.1 + 0.2 * static_cast<double>(u), 1.0 + static_cast<double>(u)});
  }
  return StochasticGraph(us, {"v"}, edges, {std::move(c)});
}

std::set<ProbeString> enumerated(const StochasticGraph& g, std::size_t v) {
  const auto fs = enumerate_feasible_strings(g, v, 1000000);
  EXPECT_FALSE(fs.truncated);
  return {fs.strings.begin(), fs.strings.end()};
}

Budget budget_for(double b, std::vector<double> costs) {
  Budget out;
  out.budget = b;
  for (std::size_t e = 0; e < costs.size(); ++e) out.costs[e] = costs[e];
  return out;
}

}  // namespace

TEST(Survival, ProductOfFailures) {
  const StochasticGraph g = star(3, Patience{3});
  EXPECT_DOUBLE_EQ(survival(g, ProbeString{}), 1.0);
  EXPECT_NEAR(survival(g, ProbeString{0, 2}), 0.9 * 0.5, 1e-15);
  EXPECT_THROW(survival(g, ProbeString{7}), ValidationError);
}

TEST(ExpectedValue, FirstActiveEdge) {
  const StochasticGraph g = star(3, Patience{3});
  EXPECT_DOUBLE_EQ(expected_value(g, ProbeString{}), 0.0);
  // 0.5·3 + 0.5·0.3·2
  EXPECT_NEAR(expected_value(g, ProbeString{2, 1}), 1.8, 1e-15);
  EXPECT_NEAR(expected_value(g, ProbeString{1, 2}), 0.3 * 2 + 0.7 * 0.5 * 3, 1e-15);
  for (const auto& s : oracle::all_strings(g, 0)) {
    EXPECT_NEAR(expected_value(g, s), oracle::string_value(g, s), 1e-15);
  }
}

TEST(Membership, PatienceAndBudget) {
  const StochasticGraph g = star(3, Patience{2});
  EXPECT_TRUE(membership(g, 0, ProbeString{}));
  EXPECT_TRUE(membership(g, 0, ProbeString{2, 0}));
  EXPECT_FALSE(membership(g, 0, ProbeString{0, 1, 2}));
  EXPECT_THROW(membership(g, 0, ProbeString{1, 1}), ValidationError);

  const StochasticGraph b = star(3, budget_for(2.0, {1.0, 1.5, 0.5}));
  EXPECT_TRUE(membership(b, 0, ProbeString{1, 2}));
  EXPECT_FALSE(membership(b, 0, ProbeString{0, 1}));
  EXPECT_TRUE(membership(b, 0, ProbeString{2, 0}));

  const StochasticGraph two({"a"}, {"x", "y"}, {{0, 0, 0.5, 1.0}, {0, 1, 0.5, 1.0}},
                            {Patience{1}, Patience{1}});
  EXPECT_THROW(membership(two, 0, ProbeString{1}), ValidationError);
}

TEST(Enumerate, PatienceCounts) {
  // Ordered selections of at most l edges out of n.
  for (std::size_t n = 0; n <= 5; ++n) {
    for (std::size_t l = 0; l <= n + 1; ++l) {
      const StochasticGraph g = star(n, Patience{l});
      std::size_t expected = 0, falling = 1;
      for (std::size_t k = 0; k <= std::min(l, n); ++k) {
        expected += falling;
        falling *= n - k;
      }
      EXPECT_EQ(enumerated(g, 0).size(), expected) << n << " " << l;
    }
  }
}

TEST(Enumerate, MatchesBruteForceOnEveryConstraintKind) {
  const std::vector<ConstraintSpec> kinds{
      Patience{0}, Patience{1}, Patience{2}, Patience{4},
      budget_for(2.0, {1.0, 1.5, 0.5, 0.9}), budget_for(0.0, {0.0, 1.0, 0.0, 2.0}),
      make_strings({{0}, {0, 2}, {0, 2, 1}, {3}}),
      make_family({{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 1, 2}})};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const StochasticGraph g = star(4, kinds[k]);
    EXPECT_EQ(enumerated(g, 0), oracle::all_strings(g, 0)) << "kind " << k;
  }
}

TEST(Enumerate, LexicographicWithEmptyFirst) {
  const StochasticGraph g = star(3, Patience{2});
  const auto fs = enumerate_feasible_strings(g, 0, 100);
  ASSERT_FALSE(fs.strings.empty());
  EXPECT_TRUE(fs.strings.front().empty());
  EXPECT_TRUE(std::is_sorted(fs.strings.begin(), fs.strings.end()));
}

TEST(Enumerate, RestrictedToOfflineSubset) {
  const StochasticGraph g = star(4, Patience{2});
  const auto fs = enumerate_feasible_strings(g, 0, OfflineMask{0b1010}, 100);
  const std::set<ProbeString> got(fs.strings.begin(), fs.strings.end());
  EXPECT_EQ(got, (std::set<ProbeString>{{}, {1}, {3}, {1, 3}, {3, 1}}));
}

TEST(Enumerate, CapTruncates) {
  const StochasticGraph g = star(5, Patience{5});
  const auto fs = enumerate_feasible_strings(g, 0, 10);
  EXPECT_TRUE(fs.truncated);
  EXPECT_EQ(fs.strings.size(), 10u);
  EXPECT_THROW(enumerate_feasible_strings(g, 0, 0), ValidationError);
}

TEST(Enumerate, CapFromEnvironment) {
  ::setenv("STOCHMATCH_CAP", "17", 1);
  EXPECT_EQ(default_string_cap(), 17u);
  ::setenv("STOCHMATCH_CAP", "junk", 1);
  EXPECT_EQ(default_string_cap(), kDefaultStringCap);
  ::unsetenv("STOCHMATCH_CAP");
  EXPECT_EQ(default_string_cap(), kDefaultStringCap);
}

TEST(Closure, PatienceIsClosedUnderEverything) {
  const auto fs = enumerate_feasible_strings(star(4, Patience{2}), 0, 1000);
  EXPECT_TRUE(check_prefix_closed(fs));
  EXPECT_TRUE(check_permutation_closed(fs));
  EXPECT_TRUE(check_substring_closed(fs));
}

TEST(Closure, ExplicitStringsCanBePrefixClosedOnly) {
  const auto fs = enumerate_feasible_strings(star(3, make_strings({{0}, {0, 2}})), 0, 1000);
  EXPECT_TRUE(check_prefix_closed(fs));
  EXPECT_FALSE(check_permutation_closed(fs));
  EXPECT_FALSE(check_substring_closed(fs));  // (2) is missing

  FeasibleStringSet truncated = fs;
  truncated.truncated = true;
  EXPECT_THROW(check_prefix_closed(truncated), ValidationError);
}

TEST(Closure, RandomPatienceInstancesAreClosed) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorParams p;
    p.num_offline = 4;
    p.num_online = 2;
    p.patience_max = 3;
    p.seed = seed;
    const StochasticGraph g = generate_random_instance(p);
    for (std::size_t v = 0; v < g.num_online(); ++v) {
      const auto fs = enumerate_feasible_strings(g, v, 10000);
      EXPECT_TRUE(check_prefix_closed(fs));
      EXPECT_TRUE(check_permutation_closed(fs));
      EXPECT_TRUE(check_substring_closed(fs));
    }
  }
}
