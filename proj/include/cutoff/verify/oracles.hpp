#pragma once

// Independent reference computations. Nothing here shares a code path with
// the routines it is used to check: path sums enumerate arcs recursively,
// stationary laws come from dense elimination, annealed probabilities from
// exact multinomial sums, and moments from closed-form recursions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <vector>

#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/paths.hpp"

namespace cutoff::oracle {

/// P^t(i, .) as a sum of path weights over all directed paths of length t.
inline std::vector<double> path_sum_distribution(const Environment& env, std::uint32_t i, int t) {
  std::vector<double> out(env.vertex_count(), 0.0);
  std::function<void(std::uint32_t, int, double)> walk = [&](std::uint32_t v, int depth, double w) {
    if (depth == t) {
      out[v] += w;
      return;
    }
    const auto d = env.degrees().out(v);
    for (auto next : env.out_neighbors(v)) walk(next, depth + 1, w / d);
  };
  walk(i, 0, 1.0);
  return out;
}

/// Q_{i,t}(theta) by enumerating every path and its weight.
inline double path_sum_q(const Environment& env, std::uint32_t i, int t, double log_theta) {
  double total = 0.0;
  std::function<void(std::uint32_t, int, double)> walk = [&](std::uint32_t v, int depth, double w) {
    if (depth == t) {
      if (exceeds(std::log(w), log_theta)) total += w;
      return;
    }
    const auto d = env.degrees().out(v);
    for (auto next : env.out_neighbors(v)) walk(next, depth + 1, w / d);
  };
  walk(i, 0, 1.0);
  return total;
}

/// Solves pi (P - I) = 0, sum pi = 1 by Gaussian elimination with partial
/// pivoting on the dense transposed system.
inline std::vector<double> dense_stationary(const Environment& env) {
  const std::size_t n = env.vertex_count();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double d = env.degrees().out(i);
    for (auto j : env.out_neighbors(i)) a[j][i] += 1.0 / d;  // row j of P^T
  }
  for (std::size_t j = 0; j < n; ++j) a[j][j] -= 1.0;
  for (std::size_t c = 0; c < n; ++c) a[n - 1][c] = 1.0;
  a[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
  return pi;
}

/// Strong connectivity as "everything reachable from 0 forwards and backwards".
inline bool reachable_both_ways(const Environment& env) {
  const std::size_t n = env.vertex_count();
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<std::uint8_t> seen(n, 0);
    std::queue<std::uint32_t> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      const auto nbrs = dir == 0 ? env.out_neighbors(v) : env.in_neighbors(v);
      for (auto w : nbrs) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          q.push(w);
        }
      }
    }
    if (count != n) return false;
  }
  return true;
}

/// mu, sigma^2, rho, gamma by direct per-vertex sums.
struct NaiveStats {
  double mu, sigma2, rho, gamma;
};

inline NaiveStats naive_stats(const DegreeSequence& seq) {
  long double m = static_cast<long double>(seq.arcs());
  long double mu = 0, rho = 0, gamma = 0;
  for (const auto& e : seq.entries()) {
    mu += e.in * std::log(static_cast<long double>(e.out));
    rho += static_cast<long double>(e.in) / e.out;
    gamma += static_cast<long double>(e.in) * e.in / e.out;
  }
  mu /= m;
  long double s2 = 0;
  for (const auto& e : seq.entries()) {
    const long double dev = std::log(static_cast<long double>(e.out)) - mu;
    s2 += e.in * dev * dev;
  }
  return {static_cast<double>(mu), static_cast<double>(s2 / m), static_cast<double>(rho / m),
          static_cast<double>(gamma / m)};
}

/// q_t(theta) exactly, summing multinomial probabilities over every vector of
/// counts of the distinct out-degree values (at most a few atoms).
inline double annealed_q_exact(const DegreeSequence& seq, int t, double log_theta) {
  std::map<std::uint32_t, long double> mass;
  for (const auto& e : seq.entries()) mass[e.out] += e.in;
  std::vector<double> log_value, log_p;
  for (const auto& [d, w] : mass) {
    log_value.push_back(std::log(static_cast<double>(d)));
    log_p.push_back(static_cast<double>(std::log(w / static_cast<long double>(seq.arcs()))));
  }
  const std::size_t k = log_value.size();
  std::vector<int> counts(k, 0);
  long double total = 0;
  std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
    if (idx + 1 == k) {
      counts[idx] = left;
      double lw = 0.0, lp = std::lgamma(t + 1.0);
      for (std::size_t j = 0; j < k; ++j) {
        lw -= counts[j] * log_value[j];
        lp += counts[j] * log_p[j] - std::lgamma(counts[j] + 1.0);
      }
      if (exceeds(lw, log_theta)) total += std::exp(static_cast<long double>(lp));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[idx] = c;
      rec(idx + 1, left - c);
    }
  };
  rec(0, t);
  return static_cast<double>(total);
}

/// Standard normal upper tail by composite Simpson quadrature of the density.
inline double gaussian_tail_quadrature(double lambda) {
  if (lambda < 0) return 1.0 - gaussian_tail_quadrature(-lambda);
  const double upper = lambda + 40.0;
  const int steps = 400000;
  const double h = (upper - lambda) / steps;
  auto phi = [](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); };
  double acc = phi(lambda) + phi(upper);
  for (int k = 1; k < steps; ++k) acc += (k % 2 ? 4.0 : 2.0) * phi(lambda + k * h);
  return acc * h / 3.0;
}

/// Moments of the out-degree-distributed mark J entering the RDE.
struct MarkMoments {
  double ratio2;        // E[(d^-)^2 / (d^+)^2]
  double ratio_inv;     // E[d^- / (d^+)^2]
  double in_mean_unif;  // E[d_I^-], I uniform
  double in_sq_unif;    // E[(d_I^-)^2], I uniform
};

inline MarkMoments mark_moments(const DegreeSequence& seq) {
  long double m = static_cast<long double>(seq.arcs());
  long double n = static_cast<long double>(seq.size());
  long double r2 = 0, ri = 0, a = 0, b = 0;
  for (const auto& e : seq.entries()) {
    const long double p = e.out / m;  // out-degree distribution
    r2 += p * e.in * e.in / (static_cast<long double>(e.out) * e.out);
    ri += p * e.in / (static_cast<long double>(e.out) * e.out);
    a += e.in / n;
    b += static_cast<long double>(e.in) * e.in / n;
  }
  return {static_cast<double>(r2), static_cast<double>(ri), static_cast<double>(a), static_cast<double>(b)};
}

/// E[Z_k^2] for the depth-k truncation started from Z_0 = 1:
/// E[Z_{k+1}^2] = E[d^-/d^+^2] E[Z_k^2] + E[d^-(d^- - 1)/d^+^2].
inline double rde_second_moment(const DegreeSequence& seq, int depth) {
  const auto mm = mark_moments(seq);
  double m2 = 1.0;
  for (int k = 0; k < depth; ++k) m2 = mm.ratio_inv * m2 + (mm.ratio2 - mm.ratio_inv);
  return m2;
}

/// E[M_star^2] from the fixed point of the recursion above:
/// E[Z^2] = (E[r2] - E[ri]) / (1 - E[ri]) and
/// E[M^2] = (n/m)^2 (E[d^-] E[Z^2] + E[d^-(d^- - 1)]).
inline double m_star_second_moment(const DegreeSequence& seq) {
  const auto mm = mark_moments(seq);
  const double ez2 = (mm.ratio2 - mm.ratio_inv) / (1.0 - mm.ratio_inv);
  const double scale = static_cast<double>(seq.size()) / static_cast<double>(seq.arcs());
  return scale * scale * (mm.in_mean_unif * ez2 + mm.in_sq_unif - mm.in_mean_unif);
}

/// Exact law of the depth-k truncation Z_k (Z_0 = 1) as a discrete
/// distribution, atoms merged on a 1e-12 grid.
inline std::map<double, double> exact_rde_law(const DegreeSequence& seq, int depth) {
  auto snap = [](double v) { return std::round(v * 1e12) / 1e12; };
  std::map<double, double> law{{1.0, 1.0}};
  const double m = static_cast<double>(seq.arcs());
  for (int k = 0; k < depth; ++k) {
    std::map<double, double> next;
    for (const auto& c : seq.classes()) {
      const double pc = static_cast<double>(c.count) * c.out / m;
      std::map<double, double> sum{{0.0, 1.0}};
      for (std::uint32_t j = 0; j < c.in; ++j) {
        std::map<double, double> conv;
        for (const auto& [x, px] : sum)
          for (const auto& [y, py] : law) conv[snap(x + y)] += px * py;
        sum = std::move(conv);
      }
      for (const auto& [x, px] : sum) next[snap(x / c.out)] += pc * px;
    }
    law = std::move(next);
  }
  return law;
}

/// Node-by-node simulation of the marked tree; values[t][tree] = M_t.
inline std::vector<std::vector<double>> naive_martingale(const DegreeSequence& seq, int t_max,
                                                         std::size_t n_trees, std::uint64_t seed) {
  const double n = static_cast<double>(seq.size());
  const double m = static_cast<double>(seq.arcs());
  std::vector<std::vector<double>> values(t_max + 1, std::vector<double>(n_trees));
  Rng rng(seed);
  struct Node {
    std::uint32_t vertex;
    double path;  // prod 1/d^+ excluding the root
  };
  // Marks via the vertex list itself: out-degree distribution = vertex of a uniform tail.
  for (std::size_t tree = 0; tree < n_trees; ++tree) {
    std::vector<Node> gen{{static_cast<std::uint32_t>(rng.below(seq.size())), 1.0}};
    for (int t = 0; t <= t_max; ++t) {
      double total = 0.0;
      for (const auto& x : gen) total += n * seq.in(x.vertex) / m * x.path;
      values[t][tree] = total;
      if (t == t_max) break;
      std::vector<Node> next;
      for (const auto& x : gen) {
        for (std::uint32_t c = 0; c < seq.in(x.vertex); ++c) {
          const auto tail = rng.below(seq.arcs());
          std::uint32_t lo = 0, hi = static_cast<std::uint32_t>(seq.size());
          while (hi - lo > 1) {
            const auto mid = (lo + hi) / 2;
            if (seq.out_offset(mid) <= tail) lo = mid; else hi = mid;
          }
          next.push_back({lo, x.path / seq.out(lo)});
        }
      }
      gen = std::move(next);
    }
  }
  return values;
}

/// Random bi-degree sequence with n vertices, every degree >= 1 and total
/// m in [n, max_arcs], extra units spread uniformly on both sides.
inline DegreeSequence random_small_sequence(Rng& rng, std::size_t n, std::uint64_t max_arcs) {
  const std::uint64_t m = n + rng.below(max_arcs - n + 1);
  std::vector<DegreePair> e(n, DegreePair{1, 1});
  for (std::uint64_t k = n; k < m; ++k) {
    ++e[rng.below(n)].in;
    ++e[rng.below(n)].out;
  }
  return DegreeSequence::build(e);
}

}  // namespace cutoff::oracle
