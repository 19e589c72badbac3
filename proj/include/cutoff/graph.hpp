#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cutoff/core/error.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"

namespace cutoff {

/// A realized environment: the tail-to-head bijection seen as a directed
/// multigraph in compressed adjacency form. Loops and multi-arcs are kept.
///
/// Out-neighbors of v are listed in tail order; in-neighbors of v are listed
/// by increasing tail index of the source tail.
class Environment {
 public:
  /// `targets[e]` is the vertex owning the head matched to tail e (tails are
  /// numbered vertex by vertex). Fails with InvalidEnvironment when the
  /// realized in-degrees disagree with `seq`.
  Environment(DegreeSequence seq, std::vector<std::uint32_t> targets, std::uint64_t seed)
      : seq_(std::move(seq)), targets_(std::move(targets)), seed_(seed) {
    const std::size_t n = seq_.size();
    if (targets_.size() != seq_.arcs()) {
      fail(ErrorCode::InvalidEnvironment, "expected " + std::to_string(seq_.arcs()) + " arcs, got " +
                                              std::to_string(targets_.size()));
    }
    std::vector<std::uint64_t> incoming(n, 0);
    for (auto t : targets_) {
      if (t >= n) fail(ErrorCode::InvalidEnvironment, "arc target out of range");
      ++incoming[t];
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (incoming[v] != seq_.in(v)) {
        fail(ErrorCode::InvalidEnvironment, "vertex " + std::to_string(v) + " receives " +
                                                std::to_string(incoming[v]) + " arcs but d^- = " +
                                                std::to_string(seq_.in(v)));
      }
    }
    sources_.resize(targets_.size());
    std::vector<std::uint64_t> cursor(n);
    for (std::size_t v = 0; v < n; ++v) cursor[v] = seq_.in_offset(v);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::uint64_t e = seq_.out_offset(v); e < seq_.out_offset(v + 1); ++e) {
        sources_[cursor[targets_[e]]++] = static_cast<std::uint32_t>(v);
      }
    }
  }

  const DegreeSequence& degrees() const noexcept { return seq_; }
  std::size_t vertex_count() const noexcept { return seq_.size(); }
  std::uint64_t arc_count() const noexcept { return seq_.arcs(); }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const std::uint32_t> out_neighbors(std::size_t v) const {
    return {targets_.data() + seq_.out_offset(v), seq_.out(v)};
  }
  std::span<const std::uint32_t> in_neighbors(std::size_t v) const {
    return {sources_.data() + seq_.in_offset(v), seq_.in(v)};
  }
  std::span<const std::uint32_t> targets() const noexcept { return targets_; }

  friend bool operator==(const Environment& a, const Environment& b) {
    return a.seed_ == b.seed_ && a.seq_ == b.seq_ && a.targets_ == b.targets_;
  }

 private:
  DegreeSequence seq_;
  std::vector<std::uint32_t> targets_;
  std::vector<std::uint32_t> sources_;
  std::uint64_t seed_;
};

/// Flags for the first k arcs of a sequential matching: step j is flagged when
/// its head lands on a vertex that was already alive.
struct CollisionTrace {
  std::uint64_t k = 0;
  std::uint64_t collisions = 0;
  std::vector<bool> per_step_flags;
};

/// First k arcs of a sequential matching, tails taken vertex by vertex in
/// tail-index order. `heads[e]` is the global head index matched to tail e.
struct PartialEnvironment {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> heads;
  std::vector<std::uint32_t> head_vertices;

  bool complete(const DegreeSequence& seq) const { return heads.size() == seq.arcs(); }

  Environment finish(DegreeSequence seq) const {
    if (!complete(seq)) fail(ErrorCode::InvalidArgument, "partial environment is not complete");
    return Environment(std::move(seq), head_vertices, seed);
  }
};

namespace detail {

// Array 0..m-1 under swap-to-end sampling; touches only O(k) memory when k is
// small relative to m. Both representations yield identical draws.
class SwapArray {
 public:
  SwapArray(std::uint64_t size, std::uint64_t expected_draws)
      : dense_(expected_draws * 8 >= size) {
    if (dense_) {
      values_.resize(size);
      for (std::uint64_t i = 0; i < size; ++i) values_[i] = i;
    } else {
      moved_.reserve(expected_draws * 2);
    }
  }

  // Removes and returns the element at position r among the first `live`.
  std::uint64_t take(std::uint64_t r, std::uint64_t live) {
    const std::uint64_t last = live - 1;
    if (dense_) {
      const std::uint64_t v = values_[r];
      values_[r] = values_[last];
      return v;
    }
    const std::uint64_t v = get(r);
    moved_[r] = get(last);
    return v;
  }

 private:
  std::uint64_t get(std::uint64_t i) const {
    auto it = moved_.find(i);
    return it == moved_.end() ? i : it->second;
  }

  bool dense_;
  std::vector<std::uint64_t> values_;
  std::unordered_map<std::uint64_t, std::uint64_t> moved_;
};

}  // namespace detail

/// Forms exactly k arcs of a uniform matching (1 <= k <= m). Each tail is
/// matched to a head drawn uniformly from the unmatched ones.
inline std::pair<PartialEnvironment, CollisionTrace> sample_with_collision_trace(
    const DegreeSequence& seq, std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t m = seq.arcs();
  if (k < 1 || k > m) {
    fail(ErrorCode::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  }
  Rng rng(seed);
  detail::SwapArray unmatched(m, k);
  std::vector<std::uint8_t> alive(seq.size(), 0);

  PartialEnvironment partial;
  partial.seed = seed;
  partial.heads.reserve(k);
  partial.head_vertices.reserve(k);
  CollisionTrace trace;
  trace.k = k;
  trace.per_step_flags.reserve(k);

  std::uint64_t live = m;
  for (std::size_t v = 0; v < seq.size() && partial.heads.size() < k; ++v) {
    for (std::uint32_t j = 0; j < seq.out(v) && partial.heads.size() < k; ++j) {
      alive[v] = 1;
      const std::uint64_t head = unmatched.take(rng.below(live), live);
      --live;
      const std::uint32_t owner = seq.head_owner(head);
      const bool collision = alive[owner] != 0;
      alive[owner] = 1;
      partial.heads.push_back(head);
      partial.head_vertices.push_back(owner);
      trace.per_step_flags.push_back(collision);
      trace.collisions += collision ? 1 : 0;
    }
  }
  return {std::move(partial), std::move(trace)};
}

/// Uniform tail-to-head bijection: result[e] is the head matched to tail e.
inline std::vector<std::uint64_t> sample_matching(const DegreeSequence& seq, std::uint64_t seed) {
  return sample_with_collision_trace(seq, seed, seq.arcs()).first.heads;
}

/// Uniform configuration-model environment. Same draws as
/// sample_with_collision_trace(seq, seed, m).
inline Environment sample_environment(const DegreeSequence& seq, std::uint64_t seed) {
  auto partial = sample_with_collision_trace(seq, seed, seq.arcs()).first;
  return partial.finish(seq);
}

/// Strongly connected components (iterative Tarjan). Returns the component id
/// of every vertex; ids are in reverse topological order of the condensation.
inline std::vector<std::uint32_t> strongly_connected_components(const Environment& env,
                                                                std::uint32_t* component_count = nullptr) {
  const std::size_t n = env.vertex_count();
  constexpr std::uint32_t unvisited = 0xFFFFFFFFu;
  std::vector<std::uint32_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<std::uint32_t> stack;
  std::vector<std::uint8_t> on_stack(n, 0);
  struct Frame {
    std::uint32_t v;
    std::uint32_t next;
  };
  std::vector<Frame> call;
  std::uint32_t counter = 0;
  std::uint32_t components = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto nbrs = env.out_neighbors(f.v);
      if (f.next < nbrs.size()) {
        const std::uint32_t w = nbrs[f.next++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::uint32_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = components;
        } while (w != v);
        ++components;
      }
    }
  }
  if (component_count) *component_count = components;
  return comp;
}

inline bool strongly_connected(const Environment& env) {
  std::uint32_t count = 0;
  strongly_connected_components(env, &count);
  return count == 1;
}

enum class Direction { forward, backward };

struct BallReport {
  std::uint32_t center = 0;
  int radius = 0;
  Direction direction = Direction::forward;
  std::uint64_t vertex_count = 1;
  std::uint64_t arc_count = 0;
  bool is_tree = true;
  std::uint64_t extra_arcs = 0;
};

/// Ball of the given radius around `center`: vertices within distance
/// `radius` and the arcs leaving (forward) or entering (backward) vertices at
/// distance < radius. extra_arcs = arcs - (vertices - 1).
inline BallReport ball(const Environment& env, std::uint32_t center, int radius,
                       Direction direction = Direction::forward) {
  if (radius < 0) fail(ErrorCode::InvalidArgument, "ball radius must be >= 0");
  BallReport report;
  report.center = center;
  report.radius = radius;
  report.direction = direction;
  // Small balls are the common case; a hash map keeps this O(ball size).
  std::unordered_map<std::uint32_t, int> dist;
  dist.emplace(center, 0);
  std::vector<std::uint32_t> frontier{center};
  std::uint64_t arcs = 0;
  for (int d = 0; d < radius && !frontier.empty(); ++d) {
    std::vector<std::uint32_t> next;
    for (auto v : frontier) {
      const auto nbrs = direction == Direction::forward ? env.out_neighbors(v) : env.in_neighbors(v);
      arcs += nbrs.size();
      for (auto w : nbrs) {
        if (dist.emplace(w, d + 1).second) next.push_back(w);
      }
    }
    frontier = std::move(next);
  }
  report.vertex_count = dist.size();
  report.arc_count = arcs;
  report.extra_arcs = arcs - (report.vertex_count - 1);
  report.is_tree = report.extra_arcs == 0;
  return report;
}

/// Vertices whose forward ball of radius h is a directed tree, sorted.
inline std::vector<std::uint32_t> v_star(const Environment& env) {
  const int h = tree_horizon(env.degrees());
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < env.vertex_count(); ++v) {
    if (ball(env, v, h, Direction::forward).is_tree) out.push_back(v);
  }
  return out;
}

/// max_i P^l(i, V \ S) for l = 0..l_max, where S is a sorted vertex set.
/// Computed backwards: f_{l+1}(i) = (1/d_i^+) sum_{i->j} f_l(j).
inline std::vector<double> escape_probabilities(const Environment& env,
                                                std::span<const std::uint32_t> set, int l_max) {
  const std::size_t n = env.vertex_count();
  std::vector<double> f(n, 1.0);
  for (auto v : set) f[v] = 0.0;
  std::vector<double> result;
  result.push_back(*std::max_element(f.begin(), f.end()));
  std::vector<double> g(n);
  for (int l = 1; l <= l_max; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto j : env.out_neighbors(i)) acc += f[j];
      g[i] = acc / env.degrees().out(i);
    }
    std::swap(f, g);
    result.push_back(*std::max_element(f.begin(), f.end()));
  }
  return result;
}

struct MultigraphCounts {
  std::uint64_t loops = 0;
  std::uint64_t multi_arcs = 0;  // arcs duplicating an earlier arc with the same endpoints
};

inline MultigraphCounts multigraph_counts(const Environment& env) {
  MultigraphCounts c;
  std::vector<std::uint32_t> nbrs;
  for (std::uint32_t v = 0; v < env.vertex_count(); ++v) {
    nbrs.assign(env.out_neighbors(v).begin(), env.out_neighbors(v).end());
    std::sort(nbrs.begin(), nbrs.end());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == v) ++c.loops;
      if (k > 0 && nbrs[k] == nbrs[k - 1]) ++c.multi_arcs;
    }
  }
  return c;
}

// Graph file: line 1 `n m seed`, then `i: j1 j2 ... j_{d_i^+}` per vertex.

inline void write_environment(std::ostream& os, const Environment& env) {
  os << env.vertex_count() << ' ' << env.arc_count() << ' ' << env.seed() << '\n';
  for (std::size_t v = 0; v < env.vertex_count(); ++v) {
    os << v << ':';
    for (auto w : env.out_neighbors(v)) os << ' ' << w;
    os << '\n';
  }
}

inline Environment read_environment(std::istream& is) {
  std::uint64_t n = 0, m = 0, seed = 0;
  std::string line;
  skip_comment_lines(is);
  if (!std::getline(is, line)) fail(ErrorCode::Parse, "graph file: missing header");
  {
    std::istringstream header(line);
    if (!(header >> n >> m >> seed)) fail(ErrorCode::Parse, "graph file: expected `n m seed`");
  }
  if (n == 0) fail(ErrorCode::Parse, "graph file: n must be >= 1");
  std::vector<std::vector<std::uint32_t>> lists(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) fail(ErrorCode::Parse, "graph file: missing line for vertex " + std::to_string(i));
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(ErrorCode::Parse, "graph file: missing ':' on line " + std::to_string(i + 2));
    std::uint64_t id = 0;
    try {
      id = std::stoull(line.substr(0, colon));
    } catch (const std::exception&) {
      fail(ErrorCode::Parse, "graph file: bad vertex id on line " + std::to_string(i + 2));
    }
    if (id != i) fail(ErrorCode::Parse, "graph file: vertices must be listed in order 0..n-1");
    std::istringstream rest(line.substr(colon + 1));
    std::uint64_t w = 0;
    while (rest >> w) {
      if (w >= n) fail(ErrorCode::Parse, "graph file: neighbor out of range on line " + std::to_string(i + 2));
      lists[i].push_back(static_cast<std::uint32_t>(w));
    }
    if (!rest.eof()) fail(ErrorCode::Parse, "graph file: bad token on line " + std::to_string(i + 2));
  }
  std::vector<DegreePair> entries(n, DegreePair{0, 0});
  std::vector<std::uint32_t> targets;
  targets.reserve(m);
  for (std::uint64_t i = 0; i < n; ++i) {
    entries[i].out = static_cast<std::uint32_t>(lists[i].size());
    for (auto w : lists[i]) {
      ++entries[w].in;
      targets.push_back(w);
    }
  }
  if (targets.size() != m) fail(ErrorCode::Parse, "graph file: header arc count does not match lists");
  return Environment(DegreeSequence::build(entries), std::move(targets), seed);
}

}  // namespace cutoff
