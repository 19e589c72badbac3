#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/parallel.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/walk.hpp"

namespace cutoff {

enum class PoolLabel { Z, M_star, M_t, n_pi_star };

constexpr std::string_view to_string(PoolLabel label) noexcept {
  switch (label) {
    case PoolLabel::Z: return "Z";
    case PoolLabel::M_star: return "M_star";
    case PoolLabel::M_t: return "M_t";
    case PoolLabel::n_pi_star: return "n_pi_star";
  }
  return "unknown";
}

/// Non-empty population of non-negative samples of one law.
class SamplePool {
 public:
  SamplePool(PoolLabel label, std::vector<double> values, std::uint64_t seed = 0, std::uint64_t iterations = 0)
      : label_(label), values_(std::move(values)), seed_(seed), iterations_(iterations) {
    if (values_.empty()) fail(ErrorCode::InvalidArgument, "sample pool is empty");
    for (double v : values_) {
      if (!(v >= 0.0)) fail(ErrorCode::InvalidArgument, "sample pool has a negative or NaN value");
    }
  }

  PoolLabel label() const noexcept { return label_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t iterations() const noexcept { return iterations_; }
  MeanEstimate mean() const { return mean_and_se(values_); }

 private:
  PoolLabel label_;
  std::vector<double> values_;
  std::uint64_t seed_;
  std::uint64_t iterations_;
};

/// 1-Wasserstein distance on the line: the integral over (0,1) of
/// |F_a^{-1} - F_b^{-1}| for the piecewise-constant empirical quantile
/// functions, exact for unequal sizes.
inline double wasserstein1(std::span<const double> a_values, std::span<const double> b_values) {
  if (a_values.empty() || b_values.empty()) fail(ErrorCode::InvalidArgument, "empty sample");
  std::vector<double> a(a_values.begin(), a_values.end());
  std::vector<double> b(b_values.begin(), b_values.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Quantile levels are integers in units of 1/(na nb).
  const std::uint64_t na = a.size();
  const std::uint64_t nb = b.size();
  std::uint64_t i = 0, j = 0, level = 0;
  CompensatedSum acc;
  while (i < na && j < nb) {
    const std::uint64_t end_a = (i + 1) * nb;
    const std::uint64_t end_b = (j + 1) * na;
    const std::uint64_t next = std::min(end_a, end_b);
    acc += static_cast<double>(next - level) * std::fabs(a[i] - b[j]);
    level = next;
    if (end_a == next) ++i;
    if (end_b == next) ++j;
  }
  return acc.value() / (static_cast<double>(na) * static_cast<double>(nb));
}

inline double wasserstein1(const SamplePool& a, const SamplePool& b) {
  return wasserstein1(a.values(), b.values());
}

/// Closed-form second-moment gap E[(M_{t_max} - M_t)^2]: the sum of
/// E[Sigma_k] = (n (gamma-1)/m) rho^k over k = t..t_max-1.
inline double predicted_martingale_gap(const SeqStats& s, std::size_t n, std::uint64_t m, int t, int t_max) {
  const double c = static_cast<double>(n) * (s.gamma - 1.0) / static_cast<double>(m);
  return c * std::pow(s.rho, t) * (1.0 - std::pow(s.rho, t_max - t)) / (1.0 - s.rho);
}

/// E[Sigma_t] = (n (gamma-1) / m) rho^t.
inline double predicted_sigma(const SeqStats& s, std::size_t n, std::uint64_t m, int t) {
  return static_cast<double>(n) * (s.gamma - 1.0) / static_cast<double>(m) * std::pow(s.rho, t);
}

struct MartingaleOptions {
  double work_budget = 1e8;
  unsigned jobs = 1;
};

/// Per-generation samples of M_t over independent marked trees, plus the
/// conditional-variance proxy Sigma_t = (gamma-1) sum_x w(x)^2 / d^-_{i(x)}.
struct MartingaleRun {
  std::vector<SamplePool> pools;           // pools[t], one value per tree
  std::vector<std::vector<double>> sigma;  // sigma[t][tree]
};

namespace detail {

// Nodes of one generation sharing a degree class and a path weight.
struct NodeGroup {
  std::uint32_t cls;
  std::uint64_t key;    // counts of each distinct out-degree along the path, mixed radix
  std::uint64_t count;  // number of nodes
};

struct TreeModel {
  std::vector<DegreeGroup> classes;
  IntegerLaw root_law;  // uniform vertex
  IntegerLaw mark_law;  // out-degree distribution
  std::vector<std::size_t> out_index;  // class -> distinct out-degree slot
  std::vector<std::uint32_t> out_values;
  std::vector<std::uint64_t> radix_power;
  std::uint64_t radix;
  double n, m;

  TreeModel(const DegreeSequence& seq, int t_max)
      : classes(seq.classes().begin(), seq.classes().end()),
        root_law(class_uniform_law(seq)),
        mark_law(class_out_degree_law(seq)),
        radix(static_cast<std::uint64_t>(t_max) + 1),
        n(static_cast<double>(seq.size())),
        m(static_cast<double>(seq.arcs())) {
    for (const auto& c : classes) {
      auto it = std::find(out_values.begin(), out_values.end(), c.out);
      if (it == out_values.end()) {
        out_index.push_back(out_values.size());
        out_values.push_back(c.out);
      } else {
        out_index.push_back(static_cast<std::size_t>(it - out_values.begin()));
      }
    }
    std::uint64_t p = 1;
    for (std::size_t k = 0; k < out_values.size(); ++k) {
      radix_power.push_back(p);
      if (k + 1 < out_values.size() && p > UINT64_MAX / radix) {
        fail(ErrorCode::ExplosionGuard, "too many distinct out-degrees for exact weight keys");
      }
      p *= radix;
    }
  }

  // Product of out-degrees along the path encoded by key (exact below 2^53).
  double path_product(std::uint64_t key) const {
    double prod = 1.0;
    for (std::size_t k = 0; k < out_values.size(); ++k) {
      const auto count = (key / radix_power[k]) % radix;
      for (std::uint64_t c = 0; c < count; ++c) prod *= out_values[k];
    }
    return prod;
  }
};

}  // namespace detail

/// Marked Galton-Watson trees: the root mark is uniform on V, a node of mark i
/// has d_i^- children whose marks are i.i.d. from the out-degree
/// distribution, and w(x) = (n d^-_{i(x)} / m) prod 1/d^+ over the path from
/// x up to (excluding) the root. M_t is the total weight of generation t.
///
/// Nodes are simulated in aggregate: within a generation, nodes with the same
/// class and path weight are exchangeable, so their offspring marks are drawn
/// as one multinomial. Tree k uses stream derive_seed(seed, k).
inline MartingaleRun simulate_martingale(const DegreeSequence& seq, int t_max, std::uint64_t n_trees,
                                         std::uint64_t seed, MartingaleOptions options = {}) {
  if (t_max < 0) fail(ErrorCode::InvalidArgument, "t_max must be >= 0");
  if (n_trees < 1) fail(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  const detail::TreeModel model(seq, t_max);
  const SeqStats stats = compute_stats(seq);

  // Work bound: groups per generation are capped by both the expected
  // population and the number of distinct (class, weight) pairs.
  {
    double offspring = 0.0;
    for (std::size_t c = 0; c < model.classes.size(); ++c) offspring += model.mark_law.probability(c) * model.classes[c].in;
    const double first = model.m / model.n;
    double per_tree = 1.0;
    double population = 1.0;
    double key_count = 1.0;
    const double k = static_cast<double>(model.out_values.size());
    for (int t = 1; t <= t_max; ++t) {
      population = (t == 1) ? first : population * offspring;
      key_count = key_count * (t + k - 1.0) / t;  // C(t + k - 1, k - 1)
      per_tree += std::min(population, key_count * static_cast<double>(model.classes.size()));
    }
    if (per_tree * static_cast<double>(n_trees) > options.work_budget) {
      fail(ErrorCode::ExplosionGuard, "expected work " + std::to_string(per_tree * static_cast<double>(n_trees)) +
                                          " node groups exceeds the budget");
    }
  }

  std::vector<std::vector<double>> m_values(t_max + 1, std::vector<double>(n_trees));
  std::vector<std::vector<double>> sigma(t_max + 1, std::vector<double>(n_trees));
  const std::size_t n_classes = model.classes.size();

  parallel_for(n_trees, options.jobs, [&](std::size_t tree) {
    Rng rng(derive_seed(seed, tree));
    std::vector<detail::NodeGroup> gen{{static_cast<std::uint32_t>(model.root_law.sample_index(rng)), 0, 1}};
    std::vector<detail::NodeGroup> next;
    for (int t = 0;; ++t) {
      CompensatedSum total, sig;
      for (const auto& g : gen) {
        const double in = model.classes[g.cls].in;
        const double w = model.n * in / (model.m * model.path_product(g.key));
        total += static_cast<double>(g.count) * w;
        sig += static_cast<double>(g.count) * w * w / in;
      }
      m_values[t][tree] = total.value();
      sigma[t][tree] = (stats.gamma - 1.0) * sig.value();
      if (t == t_max) break;

      next.clear();
      for (const auto& g : gen) {
        std::uint64_t remaining = g.count * model.classes[g.cls].in;
        std::uint64_t remaining_weight = model.mark_law.total;
        for (std::size_t c = 0; c < n_classes && remaining > 0; ++c) {
          const std::uint64_t wc = model.mark_law.weights[c];
          std::uint64_t x = remaining;
          if (c + 1 < n_classes && wc < remaining_weight) {
            std::binomial_distribution<std::uint64_t> binom(
                remaining, static_cast<double>(wc) / static_cast<double>(remaining_weight));
            x = binom(rng);
          }
          remaining -= x;
          remaining_weight -= wc;
          if (x > 0) {
            next.push_back({static_cast<std::uint32_t>(c), g.key + model.radix_power[model.out_index[c]], x});
          }
        }
      }
      std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) {
        return a.cls != b.cls ? a.cls < b.cls : a.key < b.key;
      });
      gen.clear();
      for (const auto& g : next) {
        if (!gen.empty() && gen.back().cls == g.cls && gen.back().key == g.key) {
          gen.back().count += g.count;
        } else {
          gen.push_back(g);
        }
      }
    }
  });

  MartingaleRun run;
  for (int t = 0; t <= t_max; ++t) {
    run.pools.emplace_back(PoolLabel::M_t, std::move(m_values[t]), seed, static_cast<std::uint64_t>(t));
  }
  run.sigma = std::move(sigma);
  return run;
}

/// Graph-side counterpart of M_t: pools[t] = {n pi_t(i) : i in V} with
/// pi_t = pi_0 P^t.
inline std::vector<SamplePool> graph_weight_pools(const Environment& env, int t_max) {
  std::vector<SamplePool> pools;
  Distribution pi = in_degree_distribution(env);
  const double n = static_cast<double>(env.vertex_count());
  for (int t = 0; t <= t_max; ++t) {
    if (t > 0) pi = step(pi);
    std::vector<double> v(pi.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = n * pi[i];
    pools.emplace_back(PoolLabel::M_t, std::move(v), env.seed(), static_cast<std::uint64_t>(t));
  }
  return pools;
}

struct RdeOptions {
  /// Rescale the pool to mean one after every iteration. The equation is
  /// linear, so c Z solves it for every c > 0; without this the pool mean
  /// drifts as a random walk along that neutral direction.
  bool renormalize = true;
};

struct RdeRun {
  SamplePool pool;
  std::vector<MeanEstimate> means;  // pool mean before rescaling, per iteration
  std::vector<double> w1_steps;     // W1(pool_k, pool_{k+1}), per iteration
};

/// Population dynamics for Z = (1/d^+_J) sum_{k <= d^-_J} Z_k with J from the
/// out-degree distribution: starting from the constant pool 1, each slot is
/// redrawn from a frozen snapshot of the previous pool. Iteration k uses
/// stream derive_seed(seed, k).
inline RdeRun sample_rde(const DegreeSequence& seq, std::size_t pool_size, std::size_t iterations,
                         std::uint64_t seed, RdeOptions options = {}) {
  if (pool_size < 1000) fail(ErrorCode::InvalidArgument, "pool_size must be >= 1000");
  if (iterations < 1) fail(ErrorCode::InvalidArgument, "iterations must be >= 1");
  const auto classes = seq.classes();
  const IntegerLaw law = class_out_degree_law(seq);
  std::vector<double> pool(pool_size, 1.0), next(pool_size);
  RdeRun run{SamplePool(PoolLabel::Z, {1.0}), {}, {}};
  for (std::size_t it = 0; it < iterations; ++it) {
    Rng rng(derive_seed(seed, it));
    for (std::size_t s = 0; s < pool_size; ++s) {
      const auto& c = classes[law.sample_index(rng)];
      double acc = 0.0;
      for (std::uint32_t k = 0; k < c.in; ++k) acc += pool[rng.below(pool_size)];
      next[s] = acc / c.out;
    }
    const MeanEstimate est = mean_and_se(next);
    run.means.push_back(est);
    if (options.renormalize && est.mean > 0.0) {
      for (double& v : next) v /= est.mean;
    }
    run.w1_steps.push_back(wasserstein1(pool, next));
    std::swap(pool, next);
  }
  run.pool = SamplePool(PoolLabel::Z, std::move(pool), seed, iterations);
  return run;
}

/// M_star = (n/m) sum_{k <= d^-_I} Z_k with I uniform on V and Z_k drawn with
/// replacement from `z_pool`.
inline SamplePool sample_m_star(const DegreeSequence& seq, const SamplePool& z_pool, std::size_t n_samples,
                                std::uint64_t seed) {
  if (z_pool.label() != PoolLabel::Z) fail(ErrorCode::InvalidArgument, "sample_m_star needs a Z pool");
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const auto classes = seq.classes();
  const IntegerLaw law = class_uniform_law(seq);
  const double scale = static_cast<double>(seq.size()) / static_cast<double>(seq.arcs());
  const auto z = z_pool.values();
  std::vector<double> out(n_samples);
  Rng rng(seed);
  for (auto& v : out) {
    const auto& c = classes[law.sample_index(rng)];
    double acc = 0.0;
    for (std::uint32_t k = 0; k < c.in; ++k) acc += z[rng.below(z.size())];
    v = scale * acc;
  }
  return SamplePool(PoolLabel::M_star, std::move(out), seed, z_pool.iterations());
}

/// {n pi(i) : i in V}.
inline SamplePool equilibrium_weight_pool(const Environment& env, const Distribution& pi_star) {
  if (&pi_star.environment() != &env) fail(ErrorCode::ContextMismatch, "distribution refers to another environment");
  const double n = static_cast<double>(env.vertex_count());
  std::vector<double> v(pi_star.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = n * pi_star[i];
  return SamplePool(PoolLabel::n_pi_star, std::move(v), env.seed(), 0);
}

// Pool CSV: comment header `# label, size, seed, iterations`, then `value`.
inline void write_pool_csv(std::ostream& os, const SamplePool& pool) {
  const auto old_precision = os.precision(17);
  os << "# label, size, seed, iterations\n";
  os << "# " << to_string(pool.label()) << ", " << pool.size() << ", " << pool.seed() << ", "
     << pool.iterations() << '\n';
  os << "value\n";
  for (double v : pool.values()) os << v << '\n';
  os.precision(old_precision);
}

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::uint64_t count = 0;
};

/// Fixed-width bins covering [0, max].
inline std::vector<HistogramBin> histogram(const SamplePool& pool, double bin_width = 0.02) {
  if (!(bin_width > 0.0)) fail(ErrorCode::InvalidArgument, "bin width must be positive");
  const double max = *std::max_element(pool.values().begin(), pool.values().end());
  const auto bins = static_cast<std::size_t>(std::floor(max / bin_width)) + 1;
  std::vector<HistogramBin> h(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    h[k].left = static_cast<double>(k) * bin_width;
    h[k].right = static_cast<double>(k + 1) * bin_width;
  }
  for (double v : pool.values()) {
    const auto k = std::min(bins - 1, static_cast<std::size_t>(std::floor(v / bin_width)));
    ++h[k].count;
  }
  return h;
}

inline void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& h) {
  const auto old_precision = os.precision(12);
  os << "bin_left,bin_right,count\n";
  for (const auto& b : h) os << b.left << ',' << b.right << ',' << b.count << '\n';
  os.precision(old_precision);
}

}  // namespace cutoff
