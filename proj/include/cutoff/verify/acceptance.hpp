#pragma once

// Acceptance suite. Every criterion runs at fixed seeds derived from one
// master seed, and the report text depends only on that seed (never on the
// number of worker threads), so two runs can be compared byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cutoff/degrees.hpp"
#include "cutoff/experiment.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/limits.hpp"
#include "cutoff/paths.hpp"
#include "cutoff/verify/oracles.hpp"
#include "cutoff/walk.hpp"

namespace cutoff::acceptance {

struct CriterionResult {
  std::string id;  // "1".."10", or "I1".. for asserted invariants
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::vector<CriterionResult> results;

  bool all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  }

  /// Numbered criteria only; asserted invariants are reported but not counted.
  bool criteria_passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed || r.id.front() == 'I'; });
  }

  std::string text() const {
    std::ostringstream os;
    for (const auto& r : results) {
      os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ": " << r.detail << '\n';
    }
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.passed ? 1 : 0;
    os << "summary: " << passed << '/' << results.size() << " passed\n";
    return os.str();
  }
};

struct Options {
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

namespace detail {

inline std::string num(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

inline DegreeSequence mixture_sequence(std::size_t n = 15000) {
  const std::uint64_t k = static_cast<std::uint64_t>(std::llround(static_cast<double>(n) / 3.0));
  const std::vector<DegreeGroup> g{{k, 2, 3}, {k, 4, 3}, {n - 2 * k, 4, 4}};
  return DegreeSequence::from_groups(g);
}

inline DegreeSequence regular_sequence(std::size_t n, std::uint32_t d) {
  const std::vector<DegreeGroup> g{{n, d, d}};
  return DegreeSequence::from_groups(g);
}

}  // namespace detail

/// dist_from_vertex against path enumeration on small random environments.
inline CriterionResult check_path_expansion(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1));
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (std::uint64_t e = 0; e < 100; ++e) {
    const std::size_t n = 1 + rng.below(6);
    const auto seq = oracle::random_small_sequence(rng, n, 2 * n);
    const Environment env = sample_environment(seq, derive_seed(seed, 1, e));
    for (std::uint32_t i = 0; i < n; ++i) {
      for (int t = 0; t <= 4; ++t) {
        const auto fast = dist_from_vertex(env, i, t);
        const auto slow = oracle::path_sum_distribution(env, i, t);
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::fabs(fast[j] - slow[j]));
        ++comparisons;
      }
    }
  }
  return {"1", "path expansion", worst <= 1e-12,
          "100 environments (n <= 6), " + std::to_string(comparisons) + " (start, t <= 4) pairs, max |diff| = " +
              detail::num(worst) + " (tol 1e-12)"};
}

/// Power iteration against a dense solve; balanced sequences against pi_0.
inline CriterionResult check_equilibrium(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 2));
  double worst_dense = 0.0;
  std::size_t found = 0;
  for (std::uint64_t attempt = 0; found < 50; ++attempt) {
    const std::size_t n = 2 + rng.below(7);
    const auto seq = oracle::random_small_sequence(rng, n, 3 * n);
    const Environment env = sample_environment(seq, derive_seed(seed, 2, attempt));
    if (!strongly_connected(env)) continue;
    ++found;
    const auto pi = equilibrium(env).pi;
    const auto ref = oracle::dense_stationary(env);
    for (std::size_t j = 0; j < n; ++j) worst_dense = std::max(worst_dense, std::fabs(pi[j] - ref[j]));
  }

  double worst_balanced = 0.0;
  std::size_t balanced = 0;
  std::vector<DegreeSequence> balanced_seqs{detail::regular_sequence(100, 3),
                                            DegreeSequence::from_groups(std::vector<DegreeGroup>{{50, 2, 2}, {50, 5, 5}})};
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<DegreePair> e(n);
    for (auto& p : e) p.in = p.out = static_cast<std::uint32_t>(1 + rng.below(4));
    balanced_seqs.push_back(DegreeSequence::build(e));
  }
  for (std::size_t k = 0; k < balanced_seqs.size(); ++k) {
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
      const Environment env = sample_environment(balanced_seqs[k], derive_seed(seed, 2, 1000 + k, attempt));
      if (!strongly_connected(env)) continue;
      const auto pi = equilibrium(env).pi;
      const auto pi0 = in_degree_distribution(env);
      for (std::size_t j = 0; j < env.vertex_count(); ++j) worst_balanced = std::max(worst_balanced, std::fabs(pi[j] - pi0[j]));
      ++balanced;
      break;
    }
  }
  const bool ok = worst_dense <= 1e-9 && worst_balanced <= 1e-9 && balanced == balanced_seqs.size();
  return {"2", "equilibrium", ok,
          "50 environments (n <= 8) max |pi - dense| = " + detail::num(worst_dense) + "; " + std::to_string(balanced) +
              " balanced sequences max |pi - pi_0| = " + detail::num(worst_balanced) + " (tol 1e-9)"};
}

/// Per-seed measurements on the three-class mixture shared by several criteria.
struct MixtureRun {
  std::uint64_t rejections = 0;
  std::vector<double> tv_to_equilibrium;  // ||pi_0 P^t - pi_star||, t = 0..30
  double proxy_tv = 0.0;                  // ||pi_h - pi_star||
  WalkProfile profile;
};

inline std::vector<MixtureRun> mixture_runs(std::uint64_t seed, unsigned jobs) {
  const auto seq = detail::mixture_sequence();
  const SeqStats stats = compute_stats(seq);
  const int t_profile = static_cast<int>(std::ceil(2.0 * stats.t_star));
  std::vector<MixtureRun> runs;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto sample = sample_connected(seq, derive_seed(seed, 3, s), 100);
    const Environment& env = sample.env;
    const auto eq = equilibrium(env);
    MixtureRun run;
    run.rejections = sample.rejections;
    Distribution pi = in_degree_distribution(env);
    for (int t = 0; t <= 30; ++t) {
      if (t > 0) pi = step(pi);
      run.tv_to_equilibrium.push_back(tv_distance(pi, eq.pi));
    }
    run.proxy_tv = tv_distance(proxy_equilibrium(env), eq.pi);
    const auto starts = select_starts(env, eq.pi, StartPolicy{}, derive_seed(seed, 3, s, 1));
    run.profile = distance_profile(env, starts, t_profile, eq.pi, jobs);
    runs.push_back(std::move(run));
  }
  return runs;
}

inline CriterionResult check_exponential_bound(const std::vector<MixtureRun>& runs) {
  const auto seq = detail::mixture_sequence();
  const SeqStats stats = compute_stats(seq);
  std::size_t good = 0;
  double worst_margin = -1.0;  // max over seeds and t of tv - bound
  for (const auto& run : runs) {
    bool ok = true;
    for (int t = 0; t <= 30; ++t) {
      const double margin = run.tv_to_equilibrium[t] - exponential_bound(stats, seq.size(), seq.arcs(), t);
      worst_margin = std::max(worst_margin, margin);
      if (margin > 0.05) ok = false;
    }
    good += ok ? 1 : 0;
  }
  return {"3", "exponential bound", good >= 19,
          std::to_string(good) + "/20 seeds within bound + 0.05 for t <= 30; max (tv - bound) = " +
              detail::num(worst_margin) + "; bound(0) = " + detail::num(exponential_bound(stats, seq.size(), seq.arcs(), 0))};
}

inline CriterionResult check_cutoff_location(const std::vector<MixtureRun>& runs) {
  const SeqStats stats = compute_stats(detail::mixture_sequence());
  const double lo = stats.t_star - 3.0 * stats.w_star;
  const double hi = stats.t_star + 3.0 * stats.w_star;
  const auto early = static_cast<std::size_t>(std::ceil(0.5 * stats.t_star));
  const auto late = static_cast<std::size_t>(std::ceil(2.0 * stats.t_star));
  std::size_t located = 0, early_ok = 0, late_ok = 0, good = 0;
  std::vector<int> crossings;
  for (const auto& run : runs) {
    const auto& p = run.profile;
    int crossing = -1;
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      if (p.tv_mean[k] < 0.5) {
        crossing = p.times[k];
        break;
      }
    }
    crossings.push_back(crossing);
    const bool in_window = crossing >= 0 && crossing >= lo && crossing <= hi;
    const bool e = p.tv_min[early] >= 0.9;
    const bool l = p.tv_max[late] <= 0.1;
    located += in_window ? 1 : 0;
    early_ok += e ? 1 : 0;
    late_ok += l ? 1 : 0;
    good += (in_window && e && l) ? 1 : 0;
  }
  const auto [cmin, cmax] = std::minmax_element(crossings.begin(), crossings.end());
  return {"4", "cutoff location", good >= 19,
          std::to_string(good) + "/20 seeds pass; mean TV first < 1/2 at t in [" + std::to_string(*cmin) + ", " +
              std::to_string(*cmax) + "], window [" + detail::num(lo) + ", " + detail::num(hi) + "] (" +
              std::to_string(located) + "/20); min TV at t=" + std::to_string(early) + " >= 0.9 in " +
              std::to_string(early_ok) + "/20; max TV at t=" + std::to_string(late) + " <= 0.1 in " +
              std::to_string(late_ok) + "/20"};
}

inline CriterionResult check_window(const std::vector<MixtureRun>& runs) {
  const SeqStats stats = compute_stats(detail::mixture_sequence());
  std::vector<WalkProfile> profiles;
  for (const auto& run : runs) profiles.push_back(run.profile);
  const WalkProfile pooled = pool_profiles(profiles);
  const WindowReport w = window_profile_check(pooled, stats, 4.0);
  std::ostringstream d;
  d << "pooled " << pooled.start_set.size() << " starts; sup gap = " << detail::num(w.sup_gap) << " (tol 0.15);";
  for (std::size_t k = 0; k < w.times.size(); ++k) {
    d << " t=" << w.times[k] << " lambda=" << detail::num(w.lambda_grid[k], 4) << " tv_max=" << detail::num(w.tv_values[k], 4)
      << " tail=" << detail::num(w.gaussian_values[k], 4) << (k + 1 < w.times.size() ? ";" : "");
  }
  return {"5", "gaussian window", w.sup_gap <= 0.15, d.str()};
}

inline CriterionResult check_proxy_validity(const std::vector<MixtureRun>& runs) {
  const int h = tree_horizon(detail::mixture_sequence());
  std::size_t good = 0;
  double lo = 1.0, hi = 0.0;
  for (const auto& run : runs) {
    good += run.proxy_tv < 0.05 ? 1 : 0;
    lo = std::min(lo, run.proxy_tv);
    hi = std::max(hi, run.proxy_tv);
  }
  return {"I1", "proxy validity", good >= 19,
          "h = " + std::to_string(h) + "; ||pi_h - pi_star|| < 0.05 in " + std::to_string(good) + "/20 seeds (need 19); range [" +
              detail::num(lo) + ", " + detail::num(hi) + "]"};
}

inline std::vector<CriterionResult> check_martingale(std::uint64_t seed, unsigned jobs) {
  const auto seq = detail::mixture_sequence();
  const SeqStats stats = compute_stats(seq);
  constexpr int t_max = 10;
  constexpr std::uint64_t n_trees = 100000;
  MartingaleOptions opts;
  opts.jobs = jobs;
  const auto run = simulate_martingale(seq, t_max, n_trees, derive_seed(seed, 6), opts);

  bool inc_ok = true, gap_ok = true, sig_ok = true;
  double worst_inc = 0.0, worst_gap = 0.0, worst_sig = 0.0;  // in SE units
  std::vector<double> buf(n_trees);
  for (int t = 0; t < t_max; ++t) {
    const auto a = run.pools[t].values();
    const auto b = run.pools[t + 1].values();
    for (std::size_t k = 0; k < n_trees; ++k) buf[k] = b[k] - a[k];
    const auto inc = mean_and_se(buf);
    const double zi = std::fabs(inc.mean) / inc.std_error;
    worst_inc = std::max(worst_inc, zi);
    inc_ok = inc_ok && zi <= 3.0;

    const auto last = run.pools[t_max].values();
    for (std::size_t k = 0; k < n_trees; ++k) buf[k] = (last[k] - a[k]) * (last[k] - a[k]);
    const auto gap = mean_and_se(buf);
    const double zg = std::fabs(gap.mean - predicted_martingale_gap(stats, seq.size(), seq.arcs(), t, t_max)) / gap.std_error;
    worst_gap = std::max(worst_gap, zg);
    gap_ok = gap_ok && zg <= 3.0;
  }
  for (int t = 0; t <= t_max; ++t) {
    const auto sig = mean_and_se(run.sigma[t]);
    const double z = std::fabs(sig.mean - predicted_sigma(stats, seq.size(), seq.arcs(), t)) /
                     std::max(sig.std_error, 1e-300);
    worst_sig = std::max(worst_sig, z);
    sig_ok = sig_ok && (z <= 3.0 || std::fabs(sig.mean - predicted_sigma(stats, seq.size(), seq.arcs(), t)) <= 1e-12);
  }
  return {{"6", "martingale", inc_ok && gap_ok,
           "1e5 trees, t_max = 10; max |increment mean| / SE = " + detail::num(worst_inc, 4) +
               "; max |E(M_10 - M_t)^2 - predicted| / SE = " + detail::num(worst_gap, 4) + " (tol 3)"},
          {"I2", "variance recursion", sig_ok,
           "max |mean Sigma_t - predicted| / SE over t <= 10 = " + detail::num(worst_sig, 4) + " (tol 3)"}};
}

inline CriterionResult check_rde_and_w1(std::uint64_t seed, unsigned jobs) {
  constexpr std::size_t pool_size = 100000;
  constexpr std::size_t iterations = 50;
  constexpr std::size_t mstar_samples = 200000;

  // Mean of the fresh pool (before rescaling) at every iteration.
  const auto fig = detail::mixture_sequence();
  const auto z_run = sample_rde(fig, pool_size, iterations, derive_seed(seed, 7));
  std::size_t within = 0;
  double worst_z = 0.0;
  for (const auto& m : z_run.means) {
    const double z = std::fabs(m.mean - 1.0) / m.std_error;
    worst_z = std::max(worst_z, z);
    within += z <= 3.0 ? 1 : 0;
  }
  const bool z_ok = within == z_run.means.size();

  const std::size_t sizes[] = {2000, 4000, 8000, 15000};
  std::vector<MeanEstimate> w1;
  std::ostringstream d;
  for (std::size_t n : sizes) {
    const auto seq = detail::mixture_sequence(n);
    std::vector<double> values(5);
    parallel_for(5, jobs, [&](std::size_t s) {
      const auto sample = sample_connected(seq, derive_seed(seed, 7, n, s), 100);
      const auto pi = equilibrium(sample.env).pi;
      const auto graph_pool = equilibrium_weight_pool(sample.env, pi);
      const auto z = sample_rde(seq, pool_size, iterations, derive_seed(seed, 7, n, s, 1));
      const auto m_star = sample_m_star(seq, z.pool, mstar_samples, derive_seed(seed, 7, n, s, 2));
      values[s] = wasserstein1(graph_pool, m_star);
    });
    w1.push_back(mean_and_se(values));
  }
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < w1.size(); ++k) {
    const double noise = std::hypot(w1[k].std_error, w1[k + 1].std_error);
    if (w1[k + 1].mean > w1[k].mean + 2.0 * noise) monotone = false;
  }
  const bool small = w1.back().mean < 0.1;
  d << "Z pool mean within 3 SE of 1 in " << within << '/' << z_run.means.size() << " iterations (max "
    << detail::num(worst_z, 4) << " SE); W1 by n:";
  for (std::size_t k = 0; k < w1.size(); ++k) {
    d << ' ' << sizes[k] << "->" << detail::num(w1[k].mean, 4) << "+-" << detail::num(w1[k].std_error, 2);
  }
  d << "; non-increasing within 2x noise: " << (monotone ? "yes" : "no") << "; W1(15000) < 0.1: " << (small ? "yes" : "no");
  return {"7", "fixed point and Wasserstein limit", z_ok && monotone && small, d.str()};
}

inline CriterionResult check_collisions(std::uint64_t seed) {
  struct Case {
    const char* name;
    DegreeSequence seq;
    std::uint64_t k;
  };
  const Case cases[] = {{"mixture k=50", detail::mixture_sequence(), 50},
                        {"(3,3)x100 k=10", detail::regular_sequence(100, 3), 10}};
  bool ok = true;
  std::ostringstream d;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& cs = cases[c];
    std::vector<double> counts(10000);
    for (std::uint64_t s = 0; s < counts.size(); ++s) {
      counts[s] = static_cast<double>(sample_with_collision_trace(cs.seq, derive_seed(seed, 8, c, s), cs.k).second.collisions);
    }
    const auto est = mean_and_se(counts);
    const double k = static_cast<double>(cs.k);
    const double bound = 2.0 * cs.seq.max_degree() * k * k / (static_cast<double>(cs.seq.arcs()) - k + 1.0);
    const bool pass = est.mean <= bound + 3.0 * est.std_error;
    ok = ok && pass;
    d << (c ? "; " : "") << cs.name << ": mean " << detail::num(est.mean, 4) << " (SE " << detail::num(est.std_error, 2)
      << ") vs bound " << detail::num(bound, 5);
  }
  return {"8", "collision bound", ok, d.str()};
}

inline CriterionResult check_annealed_clt(std::uint64_t seed) {
  const auto seq = detail::mixture_sequence();
  const SeqStats stats = compute_stats(seq);
  constexpr int t = 200;
  constexpr std::uint64_t samples = 400000;
  const double sigma = std::sqrt(stats.sigma2);
  bool ok = true;
  std::ostringstream d;
  const double cs[] = {-1.0, 0.0, 1.0};
  for (double c : cs) {
    const double log_theta = -stats.mu * t + c * sigma * std::sqrt(static_cast<double>(t));
    const auto q = WeightQuery::from_log(t, log_theta);
    const auto mc = annealed_q(seq, q, samples, derive_seed(seed, 9));  // same seed: common random numbers
    const double exact = oracle::annealed_q_exact(seq, t, log_theta);
    const double target = gaussian_tail(c);
    const bool agrees = std::fabs(mc.value - exact) <= 3.0 * mc.std_error + 1e-12;
    const bool close = std::fabs(mc.value - target) <= 0.02;
    ok = ok && agrees && close;
    d << (c > -1.0 ? "; " : "") << "c=" << c << ": q=" << detail::num(mc.value, 5) << " exact=" << detail::num(exact, 5)
      << " tail=" << detail::num(target, 5) << " gap=" << detail::num(mc.value - target, 3)
      << (agrees ? "" : " (MC disagrees with exact)");
  }
  d << " (tol 0.02)";
  return {"9", "annealed CLT", ok, d.str()};
}

/// Criteria 1-9 plus the asserted invariants.
inline Report run_acceptance(const Options& options) {
  Report r;
  r.results.push_back(check_path_expansion(options.seed));
  r.results.push_back(check_equilibrium(options.seed));
  const auto runs = mixture_runs(options.seed, options.jobs);
  r.results.push_back(check_exponential_bound(runs));
  r.results.push_back(check_cutoff_location(runs));
  r.results.push_back(check_window(runs));
  for (auto& c : check_martingale(options.seed, options.jobs)) r.results.push_back(std::move(c));
  r.results.push_back(check_rde_and_w1(options.seed, options.jobs));
  r.results.push_back(check_collisions(options.seed));
  r.results.push_back(check_annealed_clt(options.seed));
  r.results.push_back(check_proxy_validity(runs));
  return r;
}

/// Runs the suite twice and appends the determinism criterion.
inline Report run_full_acceptance(const Options& options) {
  Report first = run_acceptance(options);
  const Report second = run_acceptance(options);
  const bool same = first.text() == second.text();
  first.results.push_back({"10", "determinism", same,
                           same ? "two runs with the same seed produced identical reports"
                                : "two runs with the same seed produced different reports"});
  return first;
}

}  // namespace cutoff::acceptance
