#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cutoff/degrees.hpp"
#include "cutoff/verify/oracles.hpp"

using namespace cutoff;

namespace {

DegreeSequence mixture() {
  const std::vector<DegreeGroup> g{{5000, 2, 3}, {5000, 4, 3}, {5000, 4, 4}};
  return DegreeSequence::from_groups(g);
}

DegreeSequence regular(std::uint64_t n, std::uint32_t d) {
  const std::vector<DegreeGroup> g{{n, d, d}};
  return DegreeSequence::from_groups(g);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(DegreeSequence, RegularThree) {
  const auto seq = regular(100, 3);
  EXPECT_EQ(seq.size(), 100u);
  EXPECT_EQ(seq.arcs(), 300u);
  EXPECT_TRUE(seq.sparse_ok());
}

TEST(DegreeSequence, MixtureMixture) {
  const auto seq = mixture();
  EXPECT_EQ(seq.size(), 15000u);
  EXPECT_EQ(seq.arcs(), 50000u);
  EXPECT_EQ(seq.min_degree(), 2u);
  EXPECT_EQ(seq.max_degree(), 4u);
}

TEST(DegreeSequence, DegreeOneClearsSparseFlag) {
  const std::vector<DegreePair> e{{1, 2}, {3, 2}};
  const auto seq = build_degree_sequence(e);
  EXPECT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq.arcs(), 4u);
  EXPECT_FALSE(seq.sparse_ok());
}

TEST(DegreeSequence, Errors) {
  const std::vector<DegreePair> mismatch{{2, 2}, {3, 2}};
  EXPECT_EQ(code_of([&] { build_degree_sequence(mismatch); }), ErrorCode::SumMismatch);
  const std::vector<DegreePair> zero{{0, 1}, {1, 0}};
  EXPECT_EQ(code_of([&] { build_degree_sequence(zero); }), ErrorCode::ZeroDegree);
  const std::vector<DegreePair> empty;
  EXPECT_EQ(code_of([&] { build_degree_sequence(empty); }), ErrorCode::EmptySequence);
}

TEST(DegreeSequence, FileRoundTrip) {
  const auto seq = mixture();
  std::stringstream ss;
  ss << "# a comment header\n";
  write_degree_file(ss, seq);
  EXPECT_EQ(read_degree_file(ss), seq);
}

TEST(DegreeSequence, FileHeaderMismatch) {
  std::stringstream ss("2 5\n2 2\n2 2\n");
  EXPECT_EQ(code_of([&] { read_degree_file(ss); }), ErrorCode::SumMismatch);
}

TEST(SeqStats, RegularCase) {
  const auto s = compute_stats(regular(100, 3));
  EXPECT_NEAR(s.mu, std::log(3.0), 1e-15);
  EXPECT_EQ(s.sigma2, 0.0);
  EXPECT_NEAR(s.rho, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.gamma, 1.0, 1e-15);
  EXPECT_EQ(s.w_star, 0.0);
  EXPECT_NEAR(s.t_star, std::log(100.0) / std::log(3.0), 1e-12);
}

TEST(SeqStats, MixtureAgainstDirectSums) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto ref = oracle::naive_stats(seq);
  EXPECT_NEAR(s.mu, ref.mu, 1e-13);
  EXPECT_NEAR(s.sigma2, ref.sigma2, 1e-13);
  EXPECT_NEAR(s.rho, ref.rho, 1e-13);
  EXPECT_NEAR(s.gamma, ref.gamma, 1e-13);
  // Hand values: head out-degree is 3 w.p. 3/5 and 4 w.p. 2/5.
  EXPECT_NEAR(s.mu, 0.6 * std::log(3.0) + 0.4 * std::log(4.0), 1e-13);
  EXPECT_NEAR(s.rho, 0.3, 1e-15);
  EXPECT_NEAR(s.gamma, 16.0 / 15.0, 1e-14);
  EXPECT_NEAR(s.t_star, 7.92, 0.01);
  const double lr = std::log(4.0 / 3.0);
  EXPECT_NEAR(s.sigma2, 0.24 * lr * lr, 1e-14);
}

TEST(SeqStats, TwoByTwo) {
  const std::vector<DegreePair> e{{2, 2}, {2, 2}};
  const auto s = compute_stats(build_degree_sequence(e));
  EXPECT_EQ(s.gamma, 1.0);
  EXPECT_EQ(s.rho, 0.5);
}

TEST(SeqStats, DegenerateMu) {
  const std::vector<DegreePair> e{{1, 1}, {1, 1}};
  EXPECT_EQ(code_of([&] { compute_stats(build_degree_sequence(e)); }), ErrorCode::DegenerateMu);
}

TEST(SeqStats, InequalitiesOnRandomSequences) {
  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 1 + rng.below(40);
    const auto seq = oracle::random_small_sequence(rng, n, 4 * n);
    bool balanced = true;
    bool constant_out = true;
    for (const auto& p : seq.entries()) {
      balanced = balanced && p.in == p.out;
      constant_out = constant_out && p.out == seq.entries().front().out;
    }
    if (constant_out && seq.entries().front().out == 1) continue;  // mu = 0
    const auto s = compute_stats(seq);
    EXPECT_GE(s.gamma, 1.0 - 1e-12);
    EXPECT_LE(s.rho, 1.0 / s.delta + 1e-12);
    if (balanced) EXPECT_NEAR(s.gamma, 1.0, 1e-12);
    if (!balanced) EXPECT_GT(s.gamma, 1.0);
    EXPECT_EQ(s.sigma2 == 0.0, constant_out);
  }
}

TEST(SeqStats, ScaleProperty) {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng.below(30);
    const auto seq = oracle::random_small_sequence(rng, n, 4 * n);
    std::vector<DegreePair> doubled(seq.entries().begin(), seq.entries().end());
    doubled.insert(doubled.end(), seq.entries().begin(), seq.entries().end());
    const auto big = build_degree_sequence(doubled);
    bool mu_zero = true;
    for (const auto& p : seq.entries()) mu_zero = mu_zero && p.out == 1;
    if (mu_zero) continue;
    const auto a = compute_stats(seq);
    const auto b = compute_stats(big);
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.sigma2, b.sigma2);
    EXPECT_EQ(a.rho, b.rho);
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_NEAR(b.t_star / a.t_star, std::log(2.0 * n) / std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(SeqStats, PureFunction) {
  const auto seq = mixture();
  const auto a = compute_stats(seq);
  const auto b = compute_stats(seq);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof(SeqStats)), 0);
}

TEST(SeqStats, WindowDiagnosticReportsBothSides) {
  const auto seq = mixture();
  const auto s = compute_stats(seq);
  const auto d = window_diagnostic(s, seq.size());
  const double ln_n = std::log(15000.0);
  EXPECT_NEAR(d.lhs, s.sigma2 * ln_n, 1e-12);
  EXPECT_NEAR(d.rhs, std::log(ln_n) * std::log(ln_n), 1e-12);
}

TEST(SeqStats, TreeHorizon) {
  EXPECT_EQ(tree_horizon(mixture()), 0);
  // ln n / (10 ln 2) >= 1 needs n >= 1024.
  EXPECT_EQ(tree_horizon(regular(1100, 2)), 1);
  EXPECT_EQ(tree_horizon(regular(1023, 2)), 0);
  const std::vector<DegreePair> ones{{1, 1}};
  EXPECT_EQ(code_of([&] { tree_horizon(build_degree_sequence(ones)); }), ErrorCode::DegenerateDelta);
}

TEST(IntegerLaw, HeadOutDegreeLawIsExact) {
  const auto law = head_out_degree_law(mixture());
  ASSERT_EQ(law.values.size(), 2u);
  EXPECT_EQ(law.values[0], 3u);
  EXPECT_EQ(law.values[1], 4u);
  EXPECT_DOUBLE_EQ(law.probability(0), 0.6);
  EXPECT_DOUBLE_EQ(law.probability(1), 0.4);
}
