#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/rng.hpp"

namespace cutoff {

/// In-degree d^- and out-degree d^+ of one vertex.
struct DegreePair {
  std::uint32_t in = 1;
  std::uint32_t out = 1;

  friend bool operator==(const DegreePair&, const DegreePair&) = default;
};

/// `count` vertices sharing the same degree pair.
struct DegreeGroup {
  std::uint64_t count = 0;
  std::uint32_t in = 1;
  std::uint32_t out = 1;

  friend bool operator==(const DegreeGroup&, const DegreeGroup&) = default;
};

/// Validated bi-degree sequence. Immutable after construction.
///
/// Every vertex has d^- >= 1 and d^+ >= 1 and both sides sum to the arc count
/// m. `sparse_ok()` reports whether the minimum degree is at least 2.
class DegreeSequence {
 public:
  static DegreeSequence build(std::span<const DegreePair> entries) {
    if (entries.empty()) fail(ErrorCode::EmptySequence, "degree sequence has no vertices");
    DegreeSequence seq;
    seq.entries_.assign(entries.begin(), entries.end());
    std::uint64_t sum_in = 0;
    std::uint64_t sum_out = 0;
    seq.min_degree_ = entries.front().in;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.in < 1 || e.out < 1) {
        fail(ErrorCode::ZeroDegree, "vertex " + std::to_string(i) + " has a zero degree");
      }
      sum_in += e.in;
      sum_out += e.out;
      seq.min_degree_ = std::min({seq.min_degree_, e.in, e.out});
      seq.max_degree_ = std::max({seq.max_degree_, e.in, e.out});
    }
    if (sum_in != sum_out) {
      fail(ErrorCode::SumMismatch, "sum of in-degrees " + std::to_string(sum_in) +
                                       " != sum of out-degrees " + std::to_string(sum_out));
    }
    seq.arcs_ = sum_in;
    seq.out_offsets_.resize(entries.size() + 1, 0);
    seq.in_offsets_.resize(entries.size() + 1, 0);
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> classes;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      seq.out_offsets_[i + 1] = seq.out_offsets_[i] + entries[i].out;
      seq.in_offsets_[i + 1] = seq.in_offsets_[i] + entries[i].in;
      ++classes[{entries[i].in, entries[i].out}];
    }
    for (const auto& [key, count] : classes) seq.classes_.push_back({count, key.first, key.second});
    return seq;
  }

  static DegreeSequence from_groups(std::span<const DegreeGroup> groups) {
    std::vector<DegreePair> entries;
    for (const auto& g : groups) entries.insert(entries.end(), g.count, DegreePair{g.in, g.out});
    return build(entries);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::uint64_t arcs() const noexcept { return arcs_; }
  std::uint32_t in(std::size_t v) const { return entries_[v].in; }
  std::uint32_t out(std::size_t v) const { return entries_[v].out; }
  std::span<const DegreePair> entries() const noexcept { return entries_; }

  /// delta: minimum over both coordinates.
  std::uint32_t min_degree() const noexcept { return min_degree_; }
  /// Delta: maximum over both coordinates.
  std::uint32_t max_degree() const noexcept { return max_degree_; }
  bool sparse_ok() const noexcept { return min_degree_ >= 2; }

  /// Global index of the first tail (resp. head) of vertex v; tails of v are
  /// [out_offset(v), out_offset(v+1)).
  std::uint64_t out_offset(std::size_t v) const { return out_offsets_[v]; }
  std::uint64_t in_offset(std::size_t v) const { return in_offsets_[v]; }

  /// Vertex owning head `head` (0 <= head < m).
  std::uint32_t head_owner(std::uint64_t head) const {
    auto it = std::upper_bound(in_offsets_.begin(), in_offsets_.end(), head);
    return static_cast<std::uint32_t>(std::distance(in_offsets_.begin(), it) - 1);
  }

  /// Distinct (d^-, d^+) classes in lexicographic order, with multiplicities.
  std::span<const DegreeGroup> classes() const noexcept { return classes_; }

  friend bool operator==(const DegreeSequence& a, const DegreeSequence& b) {
    return a.entries_ == b.entries_;
  }

 private:
  DegreeSequence() = default;

  std::vector<DegreePair> entries_;
  std::vector<std::uint64_t> out_offsets_;
  std::vector<std::uint64_t> in_offsets_;
  std::vector<DegreeGroup> classes_;
  std::uint64_t arcs_ = 0;
  std::uint32_t min_degree_ = 0;
  std::uint32_t max_degree_ = 0;
};

inline DegreeSequence build_degree_sequence(std::span<const DegreePair> entries) {
  return DegreeSequence::build(entries);
}

/// Categorical law over `values` with integer weights, sampled exactly by
/// drawing a uniform integer below the total weight.
struct IntegerLaw {
  std::vector<std::uint64_t> values;
  std::vector<std::uint64_t> weights;
  std::vector<std::uint64_t> cumulative;  // inclusive prefix sums
  std::uint64_t total = 0;

  void push(std::uint64_t value, std::uint64_t weight) {
    values.push_back(value);
    weights.push_back(weight);
    total += weight;
    cumulative.push_back(total);
  }

  double probability(std::size_t k) const {
    return static_cast<double>(weights[k]) / static_cast<double>(total);
  }

  std::size_t sample_index(Rng& rng) const {
    const std::uint64_t u = rng.below(total);
    return static_cast<std::size_t>(
        std::distance(cumulative.begin(), std::upper_bound(cumulative.begin(), cumulative.end(), u)));
  }
};

/// Law of the out-degree of the end-point of a uniformly chosen head:
/// P(D = d) = (1/m) sum_i d_i^- 1{d_i^+ = d}. Values are distinct out-degrees
/// in increasing order.
inline IntegerLaw head_out_degree_law(const DegreeSequence& seq) {
  std::map<std::uint32_t, std::uint64_t> w;
  for (const auto& c : seq.classes()) w[c.out] += c.count * c.in;
  IntegerLaw law;
  for (const auto& [d, weight] : w) law.push(d, weight);
  return law;
}

/// Out-degree distribution over degree classes: P(class c) = count_c d^+_c / m.
/// `values` holds indices into seq.classes().
inline IntegerLaw class_out_degree_law(const DegreeSequence& seq) {
  IntegerLaw law;
  const auto classes = seq.classes();
  for (std::size_t c = 0; c < classes.size(); ++c) law.push(c, classes[c].count * classes[c].out);
  return law;
}

/// Uniform vertex, aggregated to degree classes.
inline IntegerLaw class_uniform_law(const DegreeSequence& seq) {
  IntegerLaw law;
  const auto classes = seq.classes();
  for (std::size_t c = 0; c < classes.size(); ++c) law.push(c, classes[c].count);
  return law;
}

struct SeqStats {
  double mu = 0.0;       // nats
  double sigma2 = 0.0;   // nats^2
  double rho = 0.0;
  double gamma = 1.0;
  double t_star = 0.0;   // steps
  double w_star = 0.0;   // steps
  std::uint32_t delta = 0;
  std::uint32_t delta_max = 0;
};

/// Closed-form scalar statistics of a degree sequence.
///
/// mu and sigma2 are the mean and variance of ln D under the head out-degree
/// law; rho and gamma are the averages of d^-/d^+ and (d^-)^2/d^+ over arcs.
/// Sums run over degree classes with integer multiplicities, so duplicating
/// every vertex leaves all four values bit-identical.
inline SeqStats compute_stats(const DegreeSequence& seq) {
  const double m = static_cast<double>(seq.arcs());
  const double n = static_cast<double>(seq.size());
  SeqStats s;
  s.delta = seq.min_degree();
  s.delta_max = seq.max_degree();

  const IntegerLaw law = head_out_degree_law(seq);
  CompensatedSum mu;
  for (std::size_t k = 0; k < law.values.size(); ++k) {
    mu += law.probability(k) * std::log(static_cast<double>(law.values[k]));
  }
  s.mu = mu.value();
  CompensatedSum sigma2;
  for (std::size_t k = 0; k < law.values.size(); ++k) {
    const double dev = std::log(static_cast<double>(law.values[k])) - s.mu;
    sigma2 += law.probability(k) * dev * dev;
  }
  s.sigma2 = law.values.size() == 1 ? 0.0 : sigma2.value();

  CompensatedSum rho;
  CompensatedSum gamma;
  for (const auto& c : seq.classes()) {
    const double count = static_cast<double>(c.count);
    const double in = c.in;
    const double out = c.out;
    rho += count * in / out;
    gamma += count * in * in / out;
  }
  s.rho = rho.value() / m;
  s.gamma = gamma.value() / m;

  if (s.mu == 0.0) {
    fail(ErrorCode::DegenerateMu, "all out-degrees equal 1: t_star is undefined");
  }
  const double log_n = std::log(n);
  s.t_star = log_n / s.mu;
  s.w_star = std::sqrt(s.sigma2) * std::sqrt(log_n) / std::pow(s.mu, 1.5);
  return s;
}

/// Finite-n report on the window non-degeneracy condition
/// sigma^2 >> (ln ln n)^2 / ln n, compared as sigma^2 ln n vs (ln ln n)^2.
struct WindowDiagnostic {
  double lhs = 0.0;  // sigma^2 * ln n
  double rhs = 0.0;  // (ln ln n)^2
  bool applicable = false;  // ln ln n defined (n >= 3)
  bool weak = true;          // lhs < rhs
};

inline WindowDiagnostic window_diagnostic(const SeqStats& stats, std::size_t n) {
  WindowDiagnostic d;
  if (n < 3) return d;
  const double log_n = std::log(static_cast<double>(n));
  d.applicable = true;
  d.lhs = stats.sigma2 * log_n;
  d.rhs = std::log(log_n) * std::log(log_n);
  d.weak = d.lhs < d.rhs;
  return d;
}

/// Tree horizon h = floor(ln n / (10 ln Delta)).
inline int tree_horizon(const DegreeSequence& seq) {
  if (seq.max_degree() < 2) {
    fail(ErrorCode::DegenerateDelta, "maximum degree is 1: the walk is a permutation");
  }
  return static_cast<int>(std::floor(std::log(static_cast<double>(seq.size())) /
                                     (10.0 * std::log(static_cast<double>(seq.max_degree())))));
}

// Degree-sequence file: first line `n m`, then n lines `d_minus d_plus`.

inline void write_degree_file(std::ostream& os, const DegreeSequence& seq) {
  os << seq.size() << ' ' << seq.arcs() << '\n';
  for (const auto& e : seq.entries()) os << e.in << ' ' << e.out << '\n';
}

/// Skips leading `#` comment lines.
inline void skip_comment_lines(std::istream& is) {
  std::string line;
  while (is.peek() == '#') std::getline(is, line);
}

inline DegreeSequence read_degree_file(std::istream& is) {
  skip_comment_lines(is);
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  if (!(is >> n >> m)) fail(ErrorCode::Parse, "degree file: expected header `n m`");
  std::vector<DegreePair> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::int64_t in = 0;
    std::int64_t out = 0;
    if (!(is >> in >> out)) {
      fail(ErrorCode::Parse, "degree file: expected " + std::to_string(n) + " degree lines");
    }
    if (in < 1 || out < 1) {
      fail(ErrorCode::ZeroDegree, "degree file: line " + std::to_string(i + 2) + " has a degree < 1");
    }
    entries.push_back({static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(out)});
  }
  auto seq = DegreeSequence::build(entries);
  if (seq.arcs() != m) {
    fail(ErrorCode::SumMismatch, "degree file: header says m=" + std::to_string(m) +
                                     " but degrees sum to " + std::to_string(seq.arcs()));
  }
  return seq;
}

}  // namespace cutoff
