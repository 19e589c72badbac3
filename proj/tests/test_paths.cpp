#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cutoff/experiment.hpp"
#include "cutoff/paths.hpp"
#include "cutoff/verify/oracles.hpp"

using namespace cutoff;

namespace {

DegreeSequence groups(std::vector<DegreeGroup> g) { return DegreeSequence::from_groups(g); }

DegreeSequence mixture() { return groups({{5000, 2, 3}, {5000, 4, 3}, {5000, 4, 4}}); }

}  // namespace

TEST(WeightQuery, Validation) {
  EXPECT_THROW(WeightQuery::from_theta(1, 0.0), Error);
  EXPECT_THROW(WeightQuery::from_theta(1, 1.5), Error);
  EXPECT_THROW(WeightQuery::from_log(0, -1.0), Error);
  const auto q = WeightQuery::from_log(3, -2.0);
  EXPECT_DOUBLE_EQ(q.theta, std::exp(-2.0));
}

TEST(QuenchedQ, RegularIsAnIndicator) {
  const auto seq = groups({{50, 3, 3}});
  const auto env = sample_environment(seq, 1);
  const int t = 5;  // every path has weight 3^-5
  const auto above = WeightQuery::from_log(t, -t * std::log(3.0) - 0.01);
  const auto below = WeightQuery::from_log(t, -t * std::log(3.0) + 0.01);
  const auto tie = WeightQuery::from_log(t, -t * std::log(3.0));
  EXPECT_EQ(quenched_q(env, 0, above, 1000, 2).value, 1.0);
  EXPECT_EQ(quenched_q(env, 0, below, 1000, 2).value, 0.0);
  EXPECT_EQ(quenched_q(env, 0, tie, 1000, 2).value, 0.0);  // ties do not exceed
  EXPECT_EQ(annealed_q(seq, above, 1000, 2).value, 1.0);
  EXPECT_EQ(annealed_q(seq, below, 1000, 2).value, 0.0);
}

TEST(QuenchedQ, ThetaOneNeverExceeded) {
  const auto env = sample_environment(mixture(), 1);
  EXPECT_EQ(quenched_q(env, 3, WeightQuery::from_theta(2, 1.0), 1000, 5).value, 0.0);
  const auto ones = groups({{3, 1, 1}});
  const Environment cycle(ones, {1, 2, 0}, 0);
  EXPECT_EQ(quenched_q(cycle, 0, WeightQuery::from_theta(4, 1.0), 100, 5).value, 0.0);
  EXPECT_EQ(quenched_q_exact(cycle, 0, WeightQuery::from_theta(4, 1.0)), 0.0);
}

TEST(QuenchedQ, MonteCarloMatchesPathEnumeration) {
  Rng rng(12);
  int checked = 0;
  for (int k = 0; k < 40; ++k) {
    const std::size_t n = 2 + rng.below(5);
    const auto seq = oracle::random_small_sequence(rng, n, 2 * n);
    const auto env = sample_environment(seq, derive_seed(12, k));
    const int t = 1 + static_cast<int>(rng.below(4));
    const double log_theta = -0.6 * t - 0.1 * static_cast<double>(rng.below(10));
    const auto q = WeightQuery::from_log(t, log_theta);
    const double ref = oracle::path_sum_q(env, 0, t, log_theta);
    const double exact = quenched_q_exact(env, 0, q);
    EXPECT_NEAR(exact, ref, 1e-12);
    const auto est = quenched_q(env, 0, q, 20000, derive_seed(13, k));
    EXPECT_LE(std::fabs(est.value - ref), 3.0 * est.std_error + 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 40);
}

TEST(QuenchedQ, MonotoneInThetaWithCommonRandomNumbers) {
  const auto env = sample_environment(mixture(), 3);
  double prev = 1.0;
  for (double lt = -14.0; lt <= -6.0; lt += 0.25) {
    const double v = quenched_q(env, 5, WeightQuery::from_log(8, lt), 5000, 77).value;
    EXPECT_LE(v, prev);
    prev = v;
  }
  const auto seq = mixture();
  prev = 1.0;
  for (double lt = -14.0; lt <= -6.0; lt += 0.25) {
    const double v = annealed_q(seq, WeightQuery::from_log(8, lt), 5000, 77).value;
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(QuenchedQ, ExactVariantStateGuard) {
  const auto env = sample_environment(mixture(), 3);
  EXPECT_THROW(quenched_q_exact(env, 0, WeightQuery::from_log(12, -15.0), 100), Error);
}

TEST(QuenchedQ, LongPathsDoNotUnderflow) {
  const auto seq = groups({{20, 3, 3}});
  const auto env = sample_environment(seq, 1);
  const int t = 1000000;
  const auto q = WeightQuery::from_log(t, -t * std::log(3.0) - 1.0);
  EXPECT_EQ(q.theta, 0.0);  // theta itself underflows
  EXPECT_EQ(quenched_q(env, 0, q, 2, 1).value, 1.0);
}

TEST(AnnealedQ, MedianAtEightSteps) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto q = WeightQuery::from_log(8, -s.mu * 8);
  const auto est = annealed_q(seq, q, 100000, 4);
  EXPECT_NEAR(est.value, 0.5, 0.1);
  EXPECT_NEAR(est.value, oracle::annealed_q_exact(seq, 8, q.log_theta), 3 * est.std_error);
}

TEST(AnnealedQ, MatchesExactConvolution) {
  const auto seq = groups({{30, 2, 2}, {30, 3, 3}, {20, 5, 4}, {10, 3, 5}});
  for (int t : {1, 5, 17, 30}) {
    for (double c : {-1.0, 0.0, 0.7}) {
      const auto s = compute_stats(seq);
      const double lt = -s.mu * t + c * std::sqrt(s.sigma2 * t);
      const auto est = annealed_q(seq, WeightQuery::from_log(t, lt), 50000, derive_seed(9, t));
      EXPECT_LE(std::fabs(est.value - oracle::annealed_q_exact(seq, t, lt)), 3 * est.std_error + 1e-12);
    }
  }
}

TEST(AnnealedQ, GaussianLimitAwayFromTheLatticeCentre) {
  // At t = 200 the two-atom law is lattice; c = +-1 sit between atoms.
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  for (double c : {-1.0, 1.0}) {
    const double lt = -s.mu * 200 + c * std::sqrt(s.sigma2 * 200);
    EXPECT_NEAR(oracle::annealed_q_exact(seq, 200, lt), gaussian_tail(c), 0.02);
  }
}

TEST(QuenchedAnnealed, AgreeOnTreeLikeStarts) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto env = sample_environment(seq, 21);
  const auto vs = v_star(env);
  // The start's own out-degree is fixed, which moves Q by up to one lattice
  // atom. At c = -1 the threshold is "at least four 3s in eight steps" and
  // that shift is at most 0.4 P(Bin(7, 0.6) = 3) < 0.08; at c = 0 it exceeds 0.1.
  const int t = 8;
  const auto q = WeightQuery::from_log(t, -s.mu * t - std::sqrt(s.sigma2 * t));
  const double annealed = annealed_q(seq, q, 100000, 3).value;
  int close = 0;
  const int starts = 15;
  for (int k = 0; k < starts; ++k) {
    const auto i = vs[static_cast<std::size_t>(k) * vs.size() / starts];
    close += std::fabs(quenched_q(env, i, q, 100000, derive_seed(4, k)).value - annealed) < 0.1 ? 1 : 0;
  }
  EXPECT_GT(close, starts / 2);
}

TEST(GaussianTail, Values) {
  EXPECT_EQ(gaussian_tail(0.0), 0.5);
  EXPECT_NEAR(gaussian_tail(1.6449), 0.05, 1e-4);
  EXPECT_LT(gaussian_tail(40.0), 1e-300);
  EXPECT_EQ(gaussian_tail(-40.0), 1.0);
  for (double x : {-3.0, -1.2, 0.3, 1.0, 2.5, 5.0}) {
    EXPECT_NEAR(gaussian_tail(x), oracle::gaussian_tail_quadrature(x), 1e-12) << x;
  }
}

TEST(DistanceThresholds, Values) {
  const auto th = distance_thresholds(15000, 8);
  const double ln_n = std::log(15000.0);
  EXPECT_NEAR(th.upper.log_theta, std::min(0.0, 3 * std::log(ln_n) - ln_n), 1e-12);
  EXPECT_NEAR(th.lower.log_theta, -ln_n - 3 * std::log(ln_n), 1e-12);
}

TEST(WindowCheck, RegularIsDegenerate) {
  const auto seq = groups({{100, 3, 3}});
  const auto env = sample_environment(seq, 1);
  const std::vector<std::uint32_t> starts{0};
  const auto p = distance_profile(env, starts, 8, Target::proxy);
  try {
    window_profile_check(p, compute_stats(seq));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateWindow);
  }
}

TEST(WindowCheck, GridAndMonotoneTail) {
  const auto seq = groups({{1000, 2, 3}, {1000, 4, 3}, {1000, 4, 4}});
  const auto s = compute_stats(seq);
  const auto sample = sample_connected(seq, 2, 100);
  const auto eq = equilibrium(sample.env);
  const auto starts = select_starts(sample.env, eq.pi, StartPolicy{}, 1);
  const auto p = distance_profile(sample.env, starts, 20, eq.pi);
  const auto w = window_profile_check(p, s, 4.0);
  ASSERT_FALSE(w.times.empty());
  double sup = 0.0;
  for (std::size_t k = 0; k < w.times.size(); ++k) {
    EXPECT_GE(w.times[k], s.t_star - 4 * s.w_star);
    EXPECT_LE(w.times[k], s.t_star + 4 * s.w_star);
    if (k > 0) EXPECT_LT(w.gaussian_values[k], w.gaussian_values[k - 1]);
    sup = std::max(sup, w.gaps[k]);
  }
  EXPECT_EQ(sup, w.sup_gap);
}
