#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/parallel.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/graph.hpp"

namespace cutoff {

/// Probability vector over the vertices of one environment. Holds a
/// non-owning pointer to the environment, which must outlive it.
class Distribution {
 public:
  /// Validates non-negativity, length and unit mass (1e-12).
  static Distribution make(const Environment& env, std::vector<double> probs) {
    if (probs.size() != env.vertex_count()) {
      fail(ErrorCode::InvalidArgument, "distribution length does not match environment");
    }
    CompensatedSum total;
    for (double p : probs) {
      if (!(p >= 0.0)) fail(ErrorCode::InvalidArgument, "distribution has a negative entry");
      total += p;
    }
    if (std::fabs(total.value() - 1.0) > 1e-12) {
      fail(ErrorCode::InvalidArgument, "distribution does not sum to 1");
    }
    return Distribution(env, std::move(probs));
  }

  static Distribution point_mass(const Environment& env, std::uint32_t vertex) {
    if (vertex >= env.vertex_count()) fail(ErrorCode::InvalidArgument, "vertex out of range");
    std::vector<double> p(env.vertex_count(), 0.0);
    p[vertex] = 1.0;
    return Distribution(env, std::move(p));
  }

  const Environment& environment() const noexcept { return *env_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t v) const { return probs_[v]; }
  std::size_t size() const noexcept { return probs_.size(); }

  bool same_context(const Distribution& other) const noexcept { return env_ == other.env_; }

 private:
  Distribution(const Environment& env, std::vector<double> probs) : env_(&env), probs_(std::move(probs)) {}

  friend Distribution step(const Distribution&);
  friend Distribution lazy_average(const Distribution&, const Distribution&);
  friend Distribution in_degree_distribution(const Environment&);

  const Environment* env_;
  std::vector<double> probs_;
};

/// One step of the walk: vertex i sends probs[i]/d_i^+ along each tail.
inline Distribution step(const Distribution& dist) {
  const Environment& env = dist.environment();
  const auto& seq = env.degrees();
  std::vector<double> next(env.vertex_count(), 0.0);
  for (std::size_t i = 0; i < env.vertex_count(); ++i) {
    const double p = dist.probs_[i];
    if (p == 0.0) continue;
    const double share = p / seq.out(i);
    for (auto j : env.out_neighbors(i)) next[j] += share;
  }
  return Distribution(env, std::move(next));
}

inline Distribution lazy_average(const Distribution& a, const Distribution& b) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * (a.probs_[i] + b.probs_[i]);
  return Distribution(a.environment(), std::move(p));
}

/// pi_0(i) = d_i^- / m.
inline Distribution in_degree_distribution(const Environment& env) {
  const auto& seq = env.degrees();
  const double m = static_cast<double>(seq.arcs());
  std::vector<double> p(env.vertex_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = seq.in(i) / m;
  return Distribution(env, std::move(p));
}

inline Distribution advance(Distribution dist, int t) {
  for (int s = 0; s < t; ++s) dist = step(dist);
  return dist;
}

/// P^t(i, .).
inline Distribution dist_from_vertex(const Environment& env, std::uint32_t i, int t) {
  if (t < 0) fail(ErrorCode::InvalidArgument, "t must be >= 0");
  return advance(Distribution::point_mass(env, i), t);
}

inline double tv_distance(const Distribution& a, const Distribution& b) {
  if (!a.same_context(b)) fail(ErrorCode::ContextMismatch, "distributions refer to different environments");
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return std::clamp(0.5 * acc.value(), 0.0, 1.0);
}

/// pi_h = pi_0 P^h with the tree horizon h.
inline Distribution proxy_equilibrium(const Environment& env) {
  return advance(in_degree_distribution(env), tree_horizon(env.degrees()));
}

struct EquilibriumOptions {
  double tol = 1e-12;
  std::size_t max_iters = 100000;
};

struct EquilibriumResult {
  Distribution pi;
  std::size_t iterations = 0;
  /// Set when the step residual stalled and the solver switched to averaging
  /// consecutive iterates (the lazy chain (I+P)/2, same invariant measure).
  bool cesaro_fallback = false;
  double residual = 0.0;  // ||pi P - pi||_TV of the returned pi
};

/// Invariant measure by power iteration from pi_0.
///
/// The residual r_k = ||pi_k P - pi_k||_TV is non-increasing for any chain, so
/// a residual that fails to shrink over 8 steps signals periodic behaviour.
inline EquilibriumResult equilibrium(const Environment& env, EquilibriumOptions options = {}) {
  if (!strongly_connected(env)) {
    fail(ErrorCode::NotStronglyConnected, "equilibrium requires a strongly connected environment");
  }
  constexpr std::size_t stall_window = 8;
  Distribution pi = in_degree_distribution(env);
  std::vector<double> residuals;
  bool lazy = false;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    Distribution next = step(pi);
    const double r = tv_distance(pi, next);
    residuals.push_back(r);
    if (r < options.tol) {
      Distribution after = step(next);
      const double check = tv_distance(next, after);
      if (check < options.tol) return {std::move(next), it, lazy, check};
    }
    if (!lazy && residuals.size() > 2 * stall_window &&
        r >= residuals[residuals.size() - 1 - stall_window] * (1.0 - 1e-9)) {
      lazy = true;
    }
    pi = lazy ? lazy_average(pi, next) : std::move(next);
  }
  fail(ErrorCode::NoConvergence,
       "power iteration did not converge within " + std::to_string(options.max_iters) + " iterations");
}

/// sqrt(n (gamma - 1) rho^t / (m (1 - rho))) / 2: the TV bound on
/// ||pi_0 P^t - pi_star|| without its vanishing correction term.
inline double exponential_bound(const SeqStats& stats, std::size_t n, std::uint64_t m, int t) {
  if (stats.rho >= 1.0) fail(ErrorCode::RhoOne, "rho >= 1: the exponential bound is void");
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return 0.5 * std::sqrt(nn * (stats.gamma - 1.0) * std::pow(stats.rho, t) / (mm * (1.0 - stats.rho)));
}

/// Per-time TV summaries over a set of start vertices.
struct WalkProfile {
  std::vector<int> times;
  std::vector<std::uint32_t> start_set;  // sorted
  std::vector<std::vector<double>> tv;   // [start][time]
  std::vector<double> tv_min, tv_mean, tv_max;
  std::vector<double> lambda;  // (t - t_star) / w_star; NaN when w_star == 0
  double t_star = std::numeric_limits<double>::quiet_NaN();
  double w_star = std::numeric_limits<double>::quiet_NaN();
};

enum class Target { proxy, exact };

namespace detail {

inline void fill_summaries(WalkProfile& p) {
  const std::size_t T = p.times.size();
  p.tv_min.assign(T, 1.0);
  p.tv_mean.assign(T, 0.0);
  p.tv_max.assign(T, 0.0);
  p.lambda.assign(T, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < T; ++k) {
    CompensatedSum sum;
    for (const auto& row : p.tv) {
      p.tv_min[k] = std::min(p.tv_min[k], row[k]);
      p.tv_max[k] = std::max(p.tv_max[k], row[k]);
      sum += row[k];
    }
    p.tv_mean[k] = p.tv.empty() ? 0.0 : sum.value() / static_cast<double>(p.tv.size());
    if (p.w_star > 0.0) p.lambda[k] = (p.times[k] - p.t_star) / p.w_star;
  }
}

}  // namespace detail

/// TV distance from P^t(i, .) to `target` for every start i and t = 0..t_max.
/// Starts are evaluated independently (in parallel when jobs > 1) and
/// reduced in sorted start order.
inline WalkProfile distance_profile(const Environment& env, std::span<const std::uint32_t> start_set,
                                    int t_max, const Distribution& target, unsigned jobs = 1) {
  if (t_max < 1) fail(ErrorCode::InvalidArgument, "t_max must be >= 1");
  if (start_set.empty()) fail(ErrorCode::InvalidArgument, "start set is empty");
  if (&target.environment() != &env) fail(ErrorCode::ContextMismatch, "target refers to another environment");
  WalkProfile p;
  p.start_set.assign(start_set.begin(), start_set.end());
  std::sort(p.start_set.begin(), p.start_set.end());
  p.start_set.erase(std::unique(p.start_set.begin(), p.start_set.end()), p.start_set.end());
  for (int t = 0; t <= t_max; ++t) p.times.push_back(t);
  try {
    const SeqStats stats = compute_stats(env.degrees());
    p.t_star = stats.t_star;
    p.w_star = stats.w_star;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateMu) throw;
  }
  p.tv.assign(p.start_set.size(), std::vector<double>(p.times.size(), 0.0));
  parallel_for(p.start_set.size(), jobs, [&](std::size_t s) {
    Distribution d = Distribution::point_mass(env, p.start_set[s]);
    for (int t = 0; t <= t_max; ++t) {
      if (t > 0) d = step(d);
      p.tv[s][t] = tv_distance(d, target);
    }
  });
  detail::fill_summaries(p);
  return p;
}

inline WalkProfile distance_profile(const Environment& env, std::span<const std::uint32_t> start_set,
                                    int t_max, Target target, unsigned jobs = 1) {
  if (target == Target::proxy) {
    return distance_profile(env, start_set, t_max, proxy_equilibrium(env), jobs);
  }
  const auto eq = equilibrium(env);
  return distance_profile(env, start_set, t_max, eq.pi, jobs);
}

/// Concatenates the start rows of profiles sharing the same time grid and
/// window coordinates (e.g. the same degree sequence on several seeds).
inline WalkProfile pool_profiles(std::span<const WalkProfile> profiles) {
  if (profiles.empty()) fail(ErrorCode::InvalidArgument, "no profiles to pool");
  WalkProfile pooled;
  pooled.times = profiles.front().times;
  pooled.t_star = profiles.front().t_star;
  pooled.w_star = profiles.front().w_star;
  for (const auto& p : profiles) {
    if (p.times != pooled.times) fail(ErrorCode::InvalidArgument, "profiles have different time grids");
    pooled.start_set.insert(pooled.start_set.end(), p.start_set.begin(), p.start_set.end());
    pooled.tv.insert(pooled.tv.end(), p.tv.begin(), p.tv.end());
  }
  detail::fill_summaries(pooled);
  return pooled;
}

struct StartPolicy {
  enum class Kind { automatic, full, sampled } kind = Kind::automatic;
  std::size_t sample_size = 50;
  std::size_t lowest = 10;  // lowest-pi_star vertices added to a sampled set
  std::size_t full_limit = 2000;
};

/// Start vertices: all of V when full (or automatic with n <= full_limit),
/// otherwise a seeded uniform sample plus the vertices of lowest equilibrium
/// mass (ties broken by id).
inline std::vector<std::uint32_t> select_starts(const Environment& env, const Distribution& pi_star,
                                                const StartPolicy& policy, std::uint64_t seed) {
  const std::size_t n = env.vertex_count();
  const bool full = policy.kind == StartPolicy::Kind::full ||
                    (policy.kind == StartPolicy::Kind::automatic && n <= policy.full_limit);
  std::vector<std::uint32_t> starts;
  if (full || policy.sample_size >= n) {
    starts.resize(n);
    for (std::uint32_t v = 0; v < n; ++v) starts[v] = v;
    return starts;
  }
  Rng rng(seed);
  detail::SwapArray pool(n, policy.sample_size);
  std::uint64_t live = n;
  for (std::size_t k = 0; k < policy.sample_size; ++k, --live) {
    starts.push_back(static_cast<std::uint32_t>(pool.take(rng.below(live), live)));
  }
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t v = 0; v < n; ++v) order[v] = v;
  const std::size_t lowest = std::min(policy.lowest, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lowest), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return pi_star[a] < pi_star[b] || (pi_star[a] == pi_star[b] && a < b);
                    });
  starts.insert(starts.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lowest));
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  return starts;
}

// Profile CSV: `t,lambda,tv_min,tv_mean,tv_max`.

namespace detail {
inline void write_number(std::ostream& os, double x) {
  if (std::isnan(x)) {
    os << "nan";
  } else {
    os << x;
  }
}
}  // namespace detail

inline void write_profile_csv(std::ostream& os, const WalkProfile& p) {
  const auto old_precision = os.precision(12);
  os << "t,lambda,tv_min,tv_mean,tv_max\n";
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    os << p.times[k] << ',';
    detail::write_number(os, p.lambda[k]);
    os << ',' << p.tv_min[k] << ',' << p.tv_mean[k] << ',' << p.tv_max[k] << '\n';
  }
  os.precision(old_precision);
}

inline void write_profile_matrix_csv(std::ostream& os, const WalkProfile& p) {
  const auto old_precision = os.precision(12);
  os << "t,start,tv\n";
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    for (std::size_t s = 0; s < p.start_set.size(); ++s) {
      os << p.times[k] << ',' << p.start_set[s] << ',' << p.tv[s][k] << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace cutoff
