#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "stochmatch/cases.hpp"
#include "stochmatch/graph.hpp"
#include "stochmatch/harness.hpp"
#include "stochmatch/io.hpp"
#include "stochmatch/rng.hpp"

using namespace stochmatch;

namespace {

std::string read_sample(const std::string& name) {
  std::ifstream in(std::string(SAMPLES_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parse_error(const std::string& text) {
  try {
    parse_instance(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

const char* kTwoByTwo = R"({
  "offline": ["a", "b"], "online": ["x", "y"], "weight_mode": "edge",
  "edges": [{"u": "a", "v": "x", "p": 0.5, "w": 2},
            {"u": "b", "v": "x", "p": 0.25, "w": 1},
            {"u": "a", "v": "y", "p": 1, "w": 3}],
  "constraints": {"x": {"kind": "patience", "l": 1},
                  "y": {"kind": "budget", "B": 2, "costs": {"a": 1.5}}}
})";

}  // namespace

TEST(Parse, CommitmentGapInstance) {
  const StochasticGraph g = cases::commitment_gap();
  ASSERT_EQ(g.num_offline(), 3u);
  ASSERT_EQ(g.num_online(), 1u);
  EXPECT_TRUE(g.vertex_weighted());
  EXPECT_DOUBLE_EQ(g.edge(2).w, 98.0);
  EXPECT_DOUBLE_EQ(g.edge(2).p, 0.01);
  EXPECT_EQ(std::get<Patience>(g.constraint(0)).limit, 2u);
  EXPECT_TRUE(validate_graph(g).ok());
}

TEST(Parse, EdgeWeightsAndBudgetCosts) {
  const StochasticGraph g = parse_instance(std::string(kTwoByTwo));
  EXPECT_FALSE(g.vertex_weighted());
  EXPECT_EQ(g.online_edges(0), (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(g.offline_edges(0), (std::vector<EdgeId>{0, 2}));
  const auto& b = std::get<Budget>(g.constraint(1));
  EXPECT_DOUBLE_EQ(b.budget, 2.0);
  EXPECT_DOUBLE_EQ(b.costs.at(2), 1.5);
  EXPECT_EQ(g.neighbourhood(0), OfflineMask{3});
  EXPECT_EQ(g.find_edge(1, 1), std::nullopt);
}

TEST(Parse, RoundTripIsLossless) {
  for (const char* name : {"prop_separation.json", "unrankable_star.json", "single_probe.json",
                           "greedy_half_tight.json", "random_edge_weighted.json",
                           "random_vertex_weighted.json"}) {
    const StochasticGraph g = parse_instance(read_sample(name));
    EXPECT_EQ(parse_instance(serialize_instance(g)), g) << name;
  }
  const StochasticGraph g = parse_instance(std::string(kTwoByTwo));
  EXPECT_EQ(parse_instance(serialize_instance(g)), g);
}

TEST(Parse, ExplicitStringsAndFamilies) {
  const StochasticGraph g = parse_instance(std::string(R"({
    "offline": ["a", "b"], "online": ["x", "y"], "weight_mode": "edge",
    "edges": [{"u": "a", "v": "x", "p": 0.5, "w": 1}, {"u": "b", "v": "x", "p": 0.5, "w": 1},
              {"u": "a", "v": "y", "p": 0.5, "w": 1}, {"u": "b", "v": "y", "p": 0.5, "w": 1}],
    "constraints": {
      "x": {"kind": "strings", "members": [[["a", "x"]], [["a", "x"], ["b", "x"]]]},
      "y": {"kind": "family", "members": [[["b", "y"]], [["a", "y"]], [["b", "y"], ["a", "y"]]]}}
  })"));
  const auto& s = std::get<ExplicitStrings>(g.constraint(0));
  EXPECT_EQ(s.members.size(), 3u);
  EXPECT_TRUE(s.members.count({0, 1}));
  EXPECT_FALSE(s.members.count({1, 0}));
  const auto& f = std::get<ExplicitFamily>(g.constraint(1));
  EXPECT_TRUE(f.members.count({2, 3}));
  EXPECT_TRUE(validate_graph(g).ok());
  EXPECT_EQ(parse_instance(serialize_instance(g)), g);
}

TEST(Parse, MalformedFieldsReportThePath) {
  EXPECT_NE(parse_error(read_sample("malformed.json")).find("/edges/0/p"), std::string::npos);
  EXPECT_NE(parse_error("{not json").find("malformed JSON"), std::string::npos);
  EXPECT_NE(parse_error(R"({"offline": ["a"], "online": ["x"], "weight_mode": "edge",
      "edges": [{"u": "zz", "v": "x", "p": 0.5, "w": 1}], "constraints": {"x": {"kind": "patience", "l": 1}}})")
                .find("/edges/0/u"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"offline": ["a"], "online": ["x"], "weight_mode": "edge",
      "edges": [], "constraints": {"x": {"kind": "patience", "l": -1}}})")
                .find("/constraints/x/l"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"offline": ["a"], "online": ["x"], "weight_mode": "edge",
      "edges": [], "constraints": {}})")
                .find("/constraints"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"offline": ["a"], "online": ["x"], "weight_mode": "vertex",
      "vertex_weights": {}, "edges": [], "constraints": {"x": {"kind": "patience", "l": 1}}})")
                .find("/vertex_weights/a"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"offline": ["a"], "online": ["x"], "weight_mode": "heavy",
      "edges": [], "constraints": {"x": {"kind": "patience", "l": 1}}})")
                .find("/weight_mode"),
            std::string::npos);
}

TEST(Validate, FlagsBrokenInvariants) {
  auto issues_of = [](const StochasticGraph& g) {
    std::string all;
    for (const auto& s : validate_graph(g).issues) all += s + ";";
    return all;
  };
  const StochasticGraph bad_p({"a"}, {"x"}, {{0, 0, 1.5, 1.0}}, {Patience{1}});
  EXPECT_NE(issues_of(bad_p).find("probability out of range"), std::string::npos);

  const StochasticGraph dup({"a"}, {"x"}, {{0, 0, 0.5, 1.0}, {0, 0, 0.5, 1.0}}, {Patience{1}});
  EXPECT_NE(issues_of(dup).find("duplicate edge"), std::string::npos);

  const StochasticGraph neg_w({"a"}, {"x"}, {{0, 0, 0.5, -1.0}}, {Patience{1}});
  EXPECT_NE(issues_of(neg_w).find("weight negative"), std::string::npos);

  const StochasticGraph inconsistent({"a"}, {"x"}, {{0, 0, 0.5, 2.0}}, {Patience{1}}, WeightMode::vertex,
                                     {1.0});
  EXPECT_NE(issues_of(inconsistent).find("vertex-weight inconsistency"), std::string::npos);

  ExplicitStrings gap;
  gap.members = {{}, {0, 1}};
  const StochasticGraph not_closed({"a", "b"}, {"x"}, {{0, 0, 0.5, 1.0}, {1, 0, 0.5, 1.0}}, {gap});
  EXPECT_NE(issues_of(not_closed).find("not prefix-closed"), std::string::npos);

  ExplicitFamily fam;
  fam.members = {{}, {0, 1}};
  const StochasticGraph not_down({"a", "b"}, {"x"}, {{0, 0, 0.5, 1.0}, {1, 0, 0.5, 1.0}}, {fam});
  EXPECT_NE(issues_of(not_down).find("not downward-closed"), std::string::npos);

  Budget missing;
  missing.budget = 1.0;
  const StochasticGraph no_cost({"a"}, {"x"}, {{0, 0, 0.5, 1.0}}, {missing});
  EXPECT_NE(issues_of(no_cost).find("missing cost"), std::string::npos);

  const StochasticGraph dup_name({"a", "a"}, {"x"}, {}, {Patience{1}});
  EXPECT_NE(issues_of(dup_name).find("duplicate vertex id"), std::string::npos);
}

TEST(Matching, CheckerAcceptsOnlyMatchings) {
  const StochasticGraph g = parse_instance(std::string(kTwoByTwo));
  EXPECT_TRUE(is_matching(g, make_matching(g, {1, 2})));
  EXPECT_DOUBLE_EQ(make_matching(g, {2, 1}).weight, 4.0);
  EXPECT_FALSE(is_matching(g, make_matching(g, {0, 1})));  // x twice
  EXPECT_FALSE(is_matching(g, make_matching(g, {0, 2})));  // a twice
  Matching wrong = make_matching(g, {2});
  wrong.weight = 1.0;
  EXPECT_FALSE(is_matching(g, wrong));
  EXPECT_TRUE(is_one_sided(g, OneSidedMatching{{1, 2}}));
  EXPECT_FALSE(is_one_sided(g, OneSidedMatching{{0, 1}}));
}

TEST(Induced, KeepsEdgesBetweenKeptVertices) {
  const StochasticGraph g = parse_instance(std::string(kTwoByTwo));
  const std::vector<std::size_t> us{0}, vs{1};
  const InducedSubgraph sub = induced_subgraph(g, us, vs);
  ASSERT_EQ(sub.graph.num_edges(), 1u);
  EXPECT_EQ(sub.edge_map, (std::vector<EdgeId>{2}));
  EXPECT_EQ(sub.graph.offline_names(), (std::vector<std::string>{"a"}));
  const auto& b = std::get<Budget>(sub.graph.constraint(0));
  EXPECT_DOUBLE_EQ(b.costs.at(0), 1.5);
  EXPECT_TRUE(validate_graph(sub.graph).ok());

  const StochasticGraph by_name = induced_subgraph(g, std::vector<std::string>{"b", "x"});
  EXPECT_EQ(by_name.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(by_name.edge(0).p, 0.25);
  EXPECT_THROW(induced_subgraph(g, std::vector<std::string>{"nope"}), ValidationError);

  const std::vector<std::size_t> only_x{0};
  const InducedSubgraph online = online_subgraph(g, only_x);
  EXPECT_EQ(online.graph.num_offline(), 2u);
  EXPECT_EQ(online.edge_map, (std::vector<EdgeId>{0, 1}));
}

TEST(Induced, ExplicitStringsDropRemovedEdges) {
  const StochasticGraph g({"a", "b"}, {"x"}, {{0, 0, 0.5, 1.0}, {1, 0, 0.5, 1.0}},
                          {make_strings({{0}, {1}, {0, 1}, {1, 0}})});
  const std::vector<std::size_t> us{1}, vs{0};
  const StochasticGraph sub = induced_subgraph(g, us, vs).graph;
  const auto& s = std::get<ExplicitStrings>(sub.constraint(0));
  EXPECT_EQ(s.members, (std::set<ProbeString>{{}, {0}}));
  EXPECT_TRUE(validate_graph(sub).ok());
}

TEST(Rng, StreamsAreReproducible) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(5), 5u);
  }
  EXPECT_EQ(Rng::trial_seed(10, 3), 10u ^ 3u);
}

TEST(Generator, DeterministicAndWithinRanges) {
  GeneratorParams p;
  p.num_offline = 4;
  p.num_online = 5;
  p.edge_density = 0.7;
  p.max_degree = 3;
  p.patience_min = 1;
  p.patience_max = 3;
  p.weight_min = 2.0;
  p.weight_max = 4.0;
  p.p_min = 0.1;
  p.p_max = 0.9;
  p.seed = 11;
  const StochasticGraph a = generate_random_instance(p);
  EXPECT_EQ(a, generate_random_instance(p));
  EXPECT_TRUE(validate_graph(a).ok());
  for (const Edge& e : a.edges()) {
    EXPECT_GE(e.p, 0.1);
    EXPECT_LE(e.p, 0.9);
    EXPECT_GE(e.w, 2.0);
    EXPECT_LE(e.w, 4.0);
  }
  for (std::size_t v = 0; v < a.num_online(); ++v) {
    EXPECT_LE(a.online_edges(v).size(), 3u);
    const auto limit = std::get<Patience>(a.constraint(v)).limit;
    EXPECT_GE(limit, 1u);
    EXPECT_LE(limit, 3u);
  }
  p.seed = 12;
  EXPECT_FALSE(a == generate_random_instance(p));
}

TEST(Generator, AlignedVertexWeights) {
  GeneratorParams p;
  p.num_offline = 4;
  p.num_online = 3;
  p.vertex_weighted = true;
  p.align_probabilities = true;
  p.weight_min = 1.0;
  p.weight_max = 9.0;
  p.patience_max = 3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    p.seed = seed;
    const StochasticGraph g = generate_random_instance(p);
    ASSERT_TRUE(validate_graph(g).ok());
    for (std::size_t v = 0; v < g.num_online(); ++v) {
      EXPECT_TRUE(rankability_conditions(g, v).count(2)) << "seed " << seed;
    }
  }
}

TEST(Generator, RejectsBadRanges) {
  GeneratorParams p;
  p.p_min = 0.8;
  p.p_max = 0.2;
  EXPECT_THROW(generate_random_instance(p), ValidationError);
}
