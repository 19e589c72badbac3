#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/walk.hpp"

namespace cutoff {

/// Path length and weight threshold. The threshold is carried in the log
/// domain; `theta` may underflow to 0 for long paths, `log_theta` never does.
struct WeightQuery {
  int t = 1;
  double theta = 1.0;
  double log_theta = 0.0;

  static WeightQuery from_log(int t, double log_theta) {
    if (t < 1) fail(ErrorCode::InvalidArgument, "path length must be >= 1");
    if (!(log_theta <= 0.0)) fail(ErrorCode::InvalidArgument, "theta must lie in (0, 1]");
    return {t, std::exp(log_theta), log_theta};
  }

  static WeightQuery from_theta(int t, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) fail(ErrorCode::InvalidArgument, "theta must lie in (0, 1]");
    return from_log(t, std::log(theta));
  }
};

/// Tie tolerance for `w > theta` in the log domain. Ties go to "not exceeding".
inline constexpr double kLogTieTolerance = 1e-12;

inline bool exceeds(double log_weight, double log_theta) noexcept {
  return log_weight > log_theta + kLogTieTolerance * std::max(1.0, std::fabs(log_theta));
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline Estimate binomial_estimate(std::uint64_t hits, std::uint64_t samples) {
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

/// Log-weights -sum_{k<t} ln d^+_{i_k} of n_samples independent walks of
/// length t from i. Sample s uses stream derive_seed(seed, s).
inline std::vector<double> sample_walk_log_weights(const Environment& env, std::uint32_t i, int t,
                                                   std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const auto& seq = env.degrees();
  std::vector<double> log_out(seq.max_degree() + 1, 0.0);
  for (std::uint32_t d = 1; d <= seq.max_degree(); ++d) log_out[d] = std::log(static_cast<double>(d));
  std::vector<double> out(n_samples);
  Rng rng(seed);
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    std::uint32_t v = i;
    double lw = 0.0;
    for (int k = 0; k < t; ++k) {
      const auto d = seq.out(v);
      lw -= log_out[d];
      v = env.out_neighbors(v)[rng.below(d)];
    }
    out[s] = lw;
  }
  return out;
}

/// Monte Carlo estimate of Q_{i,t}(theta): the probability that the walk of
/// length t from i follows a path of weight > theta. Estimates for different
/// thresholds under the same seed use common random numbers.
inline Estimate quenched_q(const Environment& env, std::uint32_t i, const WeightQuery& q,
                           std::uint64_t n_samples, std::uint64_t seed) {
  const auto weights = sample_walk_log_weights(env, i, q.t, n_samples, seed);
  std::uint64_t hits = 0;
  for (double lw : weights) hits += exceeds(lw, q.log_theta) ? 1 : 0;
  return binomial_estimate(hits, n_samples);
}

namespace detail {

// Path weights are products of out-degrees, so a weight is identified by the
// count of each distinct out-degree value along the path. Counts are packed
// in mixed radix (t + 1).
struct WeightKeyCodec {
  std::vector<std::uint32_t> values;  // distinct out-degrees
  std::vector<std::uint64_t> radix_power;
  std::vector<std::size_t> index_of;  // out-degree -> position in values
  std::uint64_t radix = 1;

  WeightKeyCodec(const DegreeSequence& seq, int t) {
    std::vector<bool> seen(seq.max_degree() + 1, false);
    for (const auto& c : seq.classes()) seen[c.out] = true;
    index_of.assign(seq.max_degree() + 1, 0);
    for (std::uint32_t d = 1; d <= seq.max_degree(); ++d) {
      if (seen[d]) {
        index_of[d] = values.size();
        values.push_back(d);
      }
    }
    radix = static_cast<std::uint64_t>(t) + 1;
    std::uint64_t p = 1;
    for (std::size_t k = 0; k < values.size(); ++k) {
      radix_power.push_back(p);
      if (k + 1 < values.size() && p > std::numeric_limits<std::uint64_t>::max() / radix) {
        fail(ErrorCode::TooManyWeights, "weight key does not fit in 64 bits");
      }
      p *= radix;
    }
  }

  std::uint64_t bump(std::uint64_t key, std::uint32_t out_degree) const {
    return key + radix_power[index_of[out_degree]];
  }

  double log_weight(std::uint64_t key) const {
    CompensatedSum acc;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const auto count = (key / radix_power[k]) % radix;
      acc += -static_cast<double>(count) * std::log(static_cast<double>(values[k]));
    }
    return acc.value();
  }
};

}  // namespace detail

/// Exact Q_{i,t}(theta) by propagating the joint law of (position, path
/// weight). Fails with TooManyWeights when more than `max_states`
/// (vertex, weight) pairs are reachable.
inline double quenched_q_exact(const Environment& env, std::uint32_t i, const WeightQuery& q,
                               std::size_t max_states = 100000) {
  const auto& seq = env.degrees();
  const detail::WeightKeyCodec codec(seq, q.t);
  using Layer = std::map<std::pair<std::uint32_t, std::uint64_t>, double>;
  Layer layer{{{i, 0}, 1.0}};
  for (int s = 0; s < q.t; ++s) {
    Layer next;
    for (const auto& [state, p] : layer) {
      const auto [v, key] = state;
      const auto d = seq.out(v);
      const std::uint64_t nkey = codec.bump(key, d);
      const double share = p / d;
      for (auto w : env.out_neighbors(v)) next[{w, nkey}] += share;
    }
    if (next.size() > max_states) {
      fail(ErrorCode::TooManyWeights, "more than " + std::to_string(max_states) + " reachable states");
    }
    layer = std::move(next);
  }
  CompensatedSum acc;
  for (const auto& [state, p] : layer) {
    if (exceeds(codec.log_weight(state.second), q.log_theta)) acc += p;
  }
  return acc.value();
}

/// Log-weights -sum ln D_k of i.i.d. products, D_k drawn from the head
/// out-degree law.
inline std::vector<double> sample_annealed_log_weights(const DegreeSequence& seq, int t,
                                                       std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const IntegerLaw law = head_out_degree_law(seq);
  std::vector<double> log_value(law.values.size());
  for (std::size_t k = 0; k < log_value.size(); ++k) log_value[k] = std::log(static_cast<double>(law.values[k]));
  std::vector<double> out(n_samples);
  Rng rng(seed);
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    double lw = 0.0;
    for (int k = 0; k < t; ++k) lw -= log_value[law.sample_index(rng)];
    out[s] = lw;
  }
  return out;
}

/// Monte Carlo estimate of q_t(theta) = P(prod_k 1/D_k > theta).
inline Estimate annealed_q(const DegreeSequence& seq, const WeightQuery& q, std::uint64_t n_samples,
                           std::uint64_t seed) {
  const auto weights = sample_annealed_log_weights(seq, q.t, n_samples, seed);
  std::uint64_t hits = 0;
  for (double lw : weights) hits += exceeds(lw, q.log_theta) ? 1 : 0;
  return binomial_estimate(hits, n_samples);
}

/// Standard normal upper tail.
inline double gaussian_tail(double lambda) { return 0.5 * std::erfc(lambda / std::sqrt(2.0)); }

/// Thresholds ln^3 n / n and 1 / (n ln^3 n) bracketing the distance to
/// equilibrium through Q_{i,t}.
struct DistanceThresholds {
  WeightQuery upper;  // ln^3 n / n
  WeightQuery lower;  // 1 / (n ln^3 n)
};

inline DistanceThresholds distance_thresholds(std::size_t n, int t) {
  const double log_n = std::log(static_cast<double>(n));
  const double log_cube = 3.0 * std::log(log_n);
  return {WeightQuery::from_log(t, std::min(0.0, log_cube - log_n)),
          WeightQuery::from_log(t, -log_n - log_cube)};
}

struct WindowReport {
  std::vector<int> times;
  std::vector<double> lambda_grid;
  std::vector<double> tv_values;  // tv_max
  std::vector<double> gaussian_values;
  std::vector<double> gaps;
  double sup_gap = 0.0;
};

/// Compares tv_max(t) with the Gaussian tail at lambda_t = (t - t_star)/w_star
/// for every profile time t in [t_star - half_width w_star, t_star + half_width w_star].
inline WindowReport window_profile_check(const WalkProfile& profile, const SeqStats& stats,
                                         double half_width = 4.0) {
  if (!(stats.w_star > 0.0)) {
    fail(ErrorCode::DegenerateWindow, "sigma^2 = 0: the cutoff window is degenerate");
  }
  WindowReport r;
  const double lo = stats.t_star - half_width * stats.w_star;
  const double hi = stats.t_star + half_width * stats.w_star;
  for (std::size_t k = 0; k < profile.times.size(); ++k) {
    const int t = profile.times[k];
    if (t < lo || t > hi) continue;
    const double lambda = (t - stats.t_star) / stats.w_star;
    const double g = gaussian_tail(lambda);
    const double gap = std::fabs(profile.tv_max[k] - g);
    r.times.push_back(t);
    r.lambda_grid.push_back(lambda);
    r.tv_values.push_back(profile.tv_max[k]);
    r.gaussian_values.push_back(g);
    r.gaps.push_back(gap);
    r.sup_gap = std::max(r.sup_gap, gap);
  }
  return r;
}

// Window CSV: `t,lambda,tv_max,gaussian,gap`.
inline void write_window_csv(std::ostream& os, const WindowReport& r) {
  const auto old_precision = os.precision(12);
  os << "t,lambda,tv_max,gaussian,gap\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    os << r.times[k] << ',' << r.lambda_grid[k] << ',' << r.tv_values[k] << ',' << r.gaussian_values[k]
       << ',' << r.gaps[k] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace cutoff
