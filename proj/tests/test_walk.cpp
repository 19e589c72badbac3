#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cutoff/experiment.hpp"
#include "cutoff/walk.hpp"
#include "cutoff/verify/oracles.hpp"

using namespace cutoff;

namespace {

DegreeSequence groups(std::vector<DegreeGroup> g) { return DegreeSequence::from_groups(g); }

DegreeSequence mixture() { return groups({{5000, 2, 3}, {5000, 4, 3}, {5000, 4, 4}}); }

}  // namespace

TEST(Distribution, ValidatesProbabilities) {
  const auto env = sample_environment(groups({{3, 2, 2}}), 1);
  EXPECT_THROW(Distribution::make(env, {0.5, 0.5}), Error);
  EXPECT_THROW(Distribution::make(env, {0.5, 0.6, -0.1}), Error);
  EXPECT_NO_THROW(Distribution::make(env, {0.2, 0.3, 0.5}));
}

TEST(Distribution, StepPreservesMass) {
  const auto env = sample_environment(mixture(), 4);
  Distribution d = Distribution::point_mass(env, 10);
  for (int t = 0; t < 20; ++t) {
    d = step(d);
    double total = 0.0;
    for (double p : d.probs()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(DistFromVertex, MatchesPathEnumeration) {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng.below(6);
    const auto seq = oracle::random_small_sequence(rng, n, 2 * n);
    const auto env = sample_environment(seq, derive_seed(5, k));
    for (std::uint32_t i = 0; i < n; ++i) {
      for (int t = 0; t <= 4; ++t) {
        const auto d = dist_from_vertex(env, i, t);
        const auto ref = oracle::path_sum_distribution(env, i, t);
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(d[j], ref[j], 1e-12);
      }
    }
  }
}

TEST(TvDistance, Basics) {
  const auto env = sample_environment(groups({{4, 2, 2}}), 2);
  const auto a = Distribution::point_mass(env, 0);
  const auto b = Distribution::point_mass(env, 1);
  EXPECT_EQ(tv_distance(a, a), 0.0);
  EXPECT_EQ(tv_distance(a, b), 1.0);
  const auto env2 = sample_environment(groups({{4, 2, 2}}), 3);
  EXPECT_THROW(tv_distance(a, Distribution::point_mass(env2, 0)), Error);
}

TEST(Equilibrium, MatchesDenseSolve) {
  Rng rng(6);
  int found = 0;
  for (std::uint64_t attempt = 0; found < 50; ++attempt) {
    const std::size_t n = 2 + rng.below(7);
    const auto seq = oracle::random_small_sequence(rng, n, 3 * n);
    const auto env = sample_environment(seq, derive_seed(6, attempt));
    if (!strongly_connected(env)) continue;
    ++found;
    const auto eq = equilibrium(env);
    const auto ref = oracle::dense_stationary(env);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(eq.pi[j], ref[j], 1e-9);
    EXPECT_LT(eq.residual, 1e-12);
  }
}

TEST(Equilibrium, BalancedDegreesGiveInDegreeLaw) {
  const auto seq = groups({{60, 2, 2}, {40, 5, 5}});
  const auto sample = sample_connected(seq, 8, 100);
  const auto eq = equilibrium(sample.env);
  const auto pi0 = in_degree_distribution(sample.env);
  for (std::size_t j = 0; j < seq.size(); ++j) EXPECT_NEAR(eq.pi[j], pi0[j], 1e-9);
}

TEST(Equilibrium, PeriodicChainUsesAveraging) {
  // Bipartite {0} -> {1,2} -> {0}: period 2, and pi_0 puts mass 2/5 on {0}.
  const std::vector<DegreePair> e{{2, 3}, {2, 1}, {1, 1}};
  const Environment env(build_degree_sequence(e), {1, 1, 2, 0, 0}, 0);
  const auto eq = equilibrium(env);
  EXPECT_TRUE(eq.cesaro_fallback);
  const auto ref = oracle::dense_stationary(env);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(eq.pi[j], ref[j], 1e-9);
}

TEST(Equilibrium, RejectsDisconnected) {
  const auto seq = groups({{2, 1, 1}});
  const Environment env(seq, {0, 1}, 0);
  try {
    equilibrium(env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStronglyConnected);
  }
}

TEST(ExponentialBound, BoundAtZeroOnMixture) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  // sqrt(n (gamma-1) / (m (1-rho))) / 2 with gamma - 1 = 1/15, rho = 3/10.
  const double expected = 0.5 * std::sqrt(15000.0 * (1.0 / 15.0) / (50000.0 * 0.7));
  EXPECT_NEAR(exponential_bound(s, seq.size(), seq.arcs(), 0), expected, 1e-12);
  EXPECT_NEAR(expected, 0.0845154, 1e-7);
  SeqStats degenerate = s;
  degenerate.rho = 1.0;
  EXPECT_THROW(exponential_bound(degenerate, seq.size(), seq.arcs(), 0), Error);
}

TEST(ExponentialBound, HoldsOnOneMixtureGraph) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto sample = sample_connected(seq, 31, 100);
  const auto eq = equilibrium(sample.env);
  Distribution pi = in_degree_distribution(sample.env);
  for (int t = 0; t <= 30; ++t) {
    if (t > 0) pi = step(pi);
    EXPECT_LE(tv_distance(pi, eq.pi), exponential_bound(s, seq.size(), seq.arcs(), t) + 0.05) << "t=" << t;
  }
}

TEST(Profile, RowsNonIncreasingToExactTarget) {
  const auto seq = groups({{200, 2, 3}, {200, 4, 3}, {200, 4, 4}});
  const auto sample = sample_connected(seq, 13, 100);
  const auto eq = equilibrium(sample.env);
  std::vector<std::uint32_t> starts(seq.size());
  std::iota(starts.begin(), starts.end(), 0u);
  const auto p = distance_profile(sample.env, starts, 25, eq.pi);
  for (const auto& row : p.tv) {
    for (std::size_t t = 1; t < row.size(); ++t) EXPECT_LE(row[t], row[t - 1] + 1e-9);
  }
  for (std::size_t t = 0; t < p.times.size(); ++t) {
    EXPECT_LE(p.tv_min[t], p.tv_mean[t] + 1e-15);
    EXPECT_LE(p.tv_mean[t], p.tv_max[t] + 1e-15);
  }
}

TEST(Profile, ParallelismDoesNotChangeOutput) {
  const auto seq = mixture();
  const auto sample = sample_connected(seq, 2, 100);
  const auto eq = equilibrium(sample.env);
  const auto starts = select_starts(sample.env, eq.pi, StartPolicy{}, 7);
  const auto a = distance_profile(sample.env, starts, 12, eq.pi, 1);
  const auto b = distance_profile(sample.env, starts, 12, eq.pi, 4);
  EXPECT_EQ(a.tv, b.tv);
  std::ostringstream sa, sb;
  write_profile_csv(sa, a);
  write_profile_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Profile, ProxyRowsNonIncreasingAfterHorizon) {
  const auto seq = groups({{1100, 2, 2}});
  const auto sample = sample_connected(seq, 3, 100);
  const int h = tree_horizon(seq);
  std::vector<std::uint32_t> starts{0, 1, 2, 500, 1099};
  const auto p = distance_profile(sample.env, starts, 15, Target::proxy);
  for (const auto& row : p.tv) {
    for (std::size_t t = static_cast<std::size_t>(h) + 1; t < row.size(); ++t) EXPECT_LE(row[t], row[t - 1] + 1e-9);
  }
}

TEST(Profile, WindowCoordinates) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto sample = sample_connected(seq, 1, 100);
  const std::vector<std::uint32_t> starts{0, 1};
  const auto p = distance_profile(sample.env, starts, 10, Target::proxy);
  for (std::size_t k = 0; k < p.times.size(); ++k) EXPECT_NEAR(p.lambda[k], (p.times[k] - s.t_star) / s.w_star, 1e-12);
}

TEST(StartPolicy, SampledSetIncludesLowestMass) {
  const auto seq = mixture();
  const auto sample = sample_connected(seq, 1, 100);
  const auto eq = equilibrium(sample.env);
  const auto starts = select_starts(sample.env, eq.pi, StartPolicy{}, 3);
  EXPECT_GE(starts.size(), 50u);
  EXPECT_LE(starts.size(), 60u);
  EXPECT_TRUE(std::is_sorted(starts.begin(), starts.end()));
  std::uint32_t lowest = 0;
  for (std::uint32_t v = 1; v < seq.size(); ++v) {
    if (eq.pi[v] < eq.pi[lowest]) lowest = v;
  }
  EXPECT_TRUE(std::binary_search(starts.begin(), starts.end(), lowest));
  EXPECT_EQ(starts, select_starts(sample.env, eq.pi, StartPolicy{}, 3));
}
