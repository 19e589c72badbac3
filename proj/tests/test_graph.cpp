#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cutoff/graph.hpp"
#include "cutoff/verify/oracles.hpp"

using namespace cutoff;

namespace {

DegreeSequence groups(std::vector<DegreeGroup> g) { return DegreeSequence::from_groups(g); }

DegreeSequence mixture() { return groups({{5000, 2, 3}, {5000, 4, 3}, {5000, 4, 4}}); }

}  // namespace

TEST(SampleEnvironment, SingleVertexIsASelfLoop) {
  const auto env = sample_environment(groups({{1, 1, 1}}), 3);
  ASSERT_EQ(env.out_neighbors(0).size(), 1u);
  EXPECT_EQ(env.out_neighbors(0)[0], 0u);
  EXPECT_TRUE(strongly_connected(env));
}

TEST(SampleEnvironment, TwoArcsUniform) {
  const auto seq = groups({{2, 1, 1}});
  std::uint64_t identity = 0;
  const std::uint64_t trials = 10000;
  for (std::uint64_t s = 0; s < trials; ++s) {
    const auto env = sample_environment(seq, derive_seed(99, s));
    identity += env.out_neighbors(0)[0] == 0 ? 1 : 0;
  }
  const double e = trials / 2.0;
  const double chi2 = std::pow(identity - e, 2) / e + std::pow(trials - identity - e, 2) / e;
  EXPECT_LT(chi2, 6.635);  // chi^2_1 at alpha = 0.01
}

TEST(SampleEnvironment, SmallMatchingsAreUniform) {
  // m = 5 with unequal degrees: all 120 tail-to-head bijections equally likely.
  const std::vector<DegreePair> e{{2, 1}, {1, 3}, {2, 1}};
  const auto seq = build_degree_sequence(e);
  std::map<std::vector<std::uint64_t>, std::uint64_t> counts;
  const std::uint64_t trials = 100000;
  for (std::uint64_t s = 0; s < trials; ++s) ++counts[sample_matching(seq, derive_seed(5, s))];
  EXPECT_EQ(counts.size(), 120u);
  double tv = 0.0;
  for (const auto& [matching, c] : counts) tv += std::fabs(static_cast<double>(c) / trials - 1.0 / 120.0);
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(SampleEnvironment, DegreeConservationOnMixture) {
  const auto seq = mixture();
  const auto env = sample_environment(seq, 17);
  for (std::size_t v = 0; v < seq.size(); ++v) {
    const std::size_t group = v / 5000;
    EXPECT_EQ(env.out_neighbors(v).size(), group == 2 ? 4u : 3u);
    EXPECT_EQ(env.in_neighbors(v).size(), group == 0 ? 2u : 4u);
  }
  std::vector<std::uint64_t> incoming(seq.size(), 0);
  for (auto t : env.targets()) ++incoming[t];
  for (std::size_t v = 0; v < seq.size(); ++v) EXPECT_EQ(incoming[v], seq.in(v));
}

TEST(SampleEnvironment, SameSeedSameEnvironment) {
  const auto seq = mixture();
  EXPECT_EQ(sample_environment(seq, 5), sample_environment(seq, 5));
  EXPECT_FALSE(sample_environment(seq, 5) == sample_environment(seq, 6));
}

TEST(CollisionTrace, FirstArcCollisionRate) {
  const auto seq = groups({{100, 3, 3}});
  std::uint64_t hits = 0;
  const std::uint64_t trials = 100000;
  for (std::uint64_t s = 0; s < trials; ++s) hits += sample_with_collision_trace(seq, derive_seed(8, s), 1).second.collisions;
  const double p = static_cast<double>(hits) / trials;
  const double se = std::sqrt(0.01 * 0.99 / trials);
  EXPECT_NEAR(p, 0.01, 4 * se);
}

TEST(CollisionTrace, FlagsAndBounds) {
  const auto seq = mixture();
  const auto [partial, trace] = sample_with_collision_trace(seq, 4, 50);
  EXPECT_EQ(trace.k, 50u);
  EXPECT_EQ(partial.heads.size(), 50u);
  EXPECT_EQ(trace.per_step_flags.size(), 50u);
  EXPECT_EQ(trace.collisions, static_cast<std::uint64_t>(std::count(trace.per_step_flags.begin(), trace.per_step_flags.end(), true)));
  EXPECT_THROW(sample_with_collision_trace(seq, 4, 0), Error);
  EXPECT_THROW(sample_with_collision_trace(seq, 4, seq.arcs() + 1), Error);
}

TEST(CollisionTrace, FullTraceMatchesEnvironment) {
  const auto seq = groups({{50, 3, 3}});
  const auto [partial, trace] = sample_with_collision_trace(seq, 21, seq.arcs());
  EXPECT_EQ(trace.per_step_flags.size(), seq.arcs());
  EXPECT_EQ(partial.finish(seq), sample_environment(seq, 21));
}

TEST(CollisionTrace, MeanBelowBinomialBound) {
  const auto seq = mixture();
  const std::uint64_t k = 50;
  std::vector<double> c(10000);
  for (std::uint64_t s = 0; s < c.size(); ++s) {
    c[s] = static_cast<double>(sample_with_collision_trace(seq, derive_seed(12, s), k).second.collisions);
  }
  const auto est = mean_and_se(c);
  const double bound = 2.0 * 4 * k * k / (50000.0 - k + 1.0);
  EXPECT_NEAR(bound, 0.4004, 1e-4);
  EXPECT_LE(est.mean, bound + 3 * est.std_error);
}

TEST(StronglyConnected, TwoSelfLoops) {
  const auto seq = groups({{2, 1, 1}});
  const Environment env(seq, {0, 1}, 0);
  EXPECT_FALSE(strongly_connected(env));
  EXPECT_FALSE(oracle::reachable_both_ways(env));
  std::uint32_t count = 0;
  strongly_connected_components(env, &count);
  EXPECT_EQ(count, 2u);
}

TEST(StronglyConnected, MatchesDoubleSearch) {
  Rng rng(3);
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + rng.below(12);
    const auto seq = oracle::random_small_sequence(rng, n, 2 * n);
    const auto env = sample_environment(seq, derive_seed(3, k));
    EXPECT_EQ(strongly_connected(env), oracle::reachable_both_ways(env));
  }
}

TEST(StronglyConnected, RegularTwoIsConnectedWhp) {
  const auto seq = groups({{1000, 2, 2}});
  int connected = 0;
  for (int s = 0; s < 200; ++s) connected += strongly_connected(sample_environment(seq, derive_seed(44, s))) ? 1 : 0;
  EXPECT_GE(connected, 190);
}

TEST(Ball, RadiusZero) {
  const auto env = sample_environment(mixture(), 1);
  const auto b = ball(env, 7, 0);
  EXPECT_EQ(b.vertex_count, 1u);
  EXPECT_EQ(b.arc_count, 0u);
  EXPECT_TRUE(b.is_tree);
}

TEST(Ball, SelfLoopIsNotATree) {
  const auto seq = groups({{1, 1, 1}});
  const auto env = sample_environment(seq, 0);
  const auto b = ball(env, 0, 1);
  EXPECT_EQ(b.vertex_count, 1u);
  EXPECT_GE(b.arc_count, 1u);
  EXPECT_FALSE(b.is_tree);
}

TEST(Ball, MonotoneInRadius) {
  const auto env = sample_environment(mixture(), 2);
  for (std::uint32_t c : {0u, 4999u, 12345u}) {
    for (auto dir : {Direction::forward, Direction::backward}) {
      BallReport prev = ball(env, c, 0, dir);
      for (int r = 1; r <= 6; ++r) {
        const auto b = ball(env, c, r, dir);
        EXPECT_GE(b.vertex_count, prev.vertex_count);
        EXPECT_GE(b.arc_count, prev.arc_count);
        EXPECT_EQ(b.is_tree, b.extra_arcs == 0);
        prev = b;
      }
    }
  }
}

TEST(Ball, RegularThreeMostlyTreeLike) {
  const auto seq = groups({{5000, 3, 3}});
  const auto env = sample_environment(seq, 9);
  const int h = tree_horizon(seq);
  EXPECT_EQ(h, 0);  // ln 5000 / (10 ln 3) < 1
  std::size_t trees = 0;
  for (std::uint32_t v = 0; v < seq.size(); ++v) trees += ball(env, v, 2, Direction::forward).is_tree ? 1 : 0;
  EXPECT_GT(trees, seq.size() / 2);
}

TEST(VStar, SelfLoopExcludedWhenHorizonPositive) {
  // n = 1100 with Delta = 2 gives h = 1; put a loop at vertex 0.
  const auto seq = groups({{1100, 2, 2}});
  std::vector<std::uint32_t> targets(seq.arcs());
  for (std::uint32_t v = 0; v < 1100; ++v) {
    targets[2 * v] = (v + 1) % 1100;
    targets[2 * v + 1] = (v + 2) % 1100;
  }
  // Redirect 0 -> 1 to a loop and 1098 -> 0 to 1098 -> 1; in-degrees are unchanged.
  targets[0] = 0;
  targets[2 * 1098 + 1] = 1;
  const Environment env(seq, targets, 0);
  ASSERT_EQ(tree_horizon(seq), 1);
  const auto vs = v_star(env);
  EXPECT_FALSE(std::binary_search(vs.begin(), vs.end(), 0u));
  EXPECT_TRUE(std::binary_search(vs.begin(), vs.end(), 500u));
}

TEST(VStar, EveryBallATreeGivesAllVertices) {
  const auto seq = groups({{100, 3, 3}});
  const auto env = sample_environment(seq, 1);
  EXPECT_EQ(tree_horizon(seq), 0);  // radius-0 balls are trees
  EXPECT_EQ(v_star(env).size(), 100u);
}

TEST(Escape, ZeroFromInsideAndBounded) {
  const auto seq = mixture();
  const auto env = sample_environment(seq, 3);
  std::vector<std::uint32_t> all(seq.size());
  for (std::uint32_t v = 0; v < seq.size(); ++v) all[v] = v;
  for (double p : escape_probabilities(env, all, 5)) EXPECT_EQ(p, 0.0);
  const std::vector<std::uint32_t> none;
  for (double p : escape_probabilities(env, none, 5)) EXPECT_EQ(p, 1.0);
}

TEST(Serialization, RoundTrip) {
  const auto env = sample_environment(mixture(), 77);
  std::stringstream ss;
  ss << "# config_hash=0 seed=77\n";
  write_environment(ss, env);
  EXPECT_EQ(read_environment(ss), env);
}

TEST(Serialization, RejectsBadInput) {
  std::stringstream bad("2 2 0\n0: 1\n1: 5\n");
  EXPECT_THROW(read_environment(bad), Error);
}

TEST(Multigraph, CountsLoopsAndRepeats) {
  const auto seq = groups({{2, 2, 2}});
  const Environment env(seq, {0, 1, 1, 0}, 0);
  const auto c = multigraph_counts(env);
  EXPECT_EQ(c.loops, 2u);
  EXPECT_EQ(c.multi_arcs, 0u);
  const Environment env2(seq, {1, 1, 0, 0}, 0);
  EXPECT_EQ(multigraph_counts(env2).multi_arcs, 2u);
}
