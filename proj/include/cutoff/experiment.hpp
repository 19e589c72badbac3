#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/walk.hpp"

namespace cutoff {

/// Everything an experiment needs. Parsed from `key = value` lines where the
/// value is JSON (a bare word is read as a string) and `#` starts a comment.
struct ExperimentConfig {
  std::vector<DegreeGroup> groups;  // [[count, d_minus, d_plus], ...]
  std::string degree_file;          // alternative to groups
  std::optional<std::uint64_t> seed;
  std::uint64_t n_env = 1;
  std::string start_policy = "auto";  // auto | full | sampled
  std::uint64_t start_k = 50;
  std::uint64_t start_lowest = 10;
  std::uint64_t t_max = 30;
  double window_half_width = 4.0;
  std::string target = "exact";  // exact | proxy
  std::uint64_t mc_samples = 100000;
  std::uint64_t pool_size = 100000;
  std::uint64_t pool_iterations = 50;
  std::uint64_t mstar_samples = 200000;
  std::uint64_t n_trees = 10000;
  std::uint64_t tree_t_max = 12;
  bool renormalize = true;
  double bin_width = 0.02;
  std::uint64_t resample_cap = 100;
  std::string out = "out";

  /// Applies one `key = value` assignment.
  void set(const std::string& key, const std::string& raw_value) {
    nlohmann::json v;
    try {
      v = nlohmann::json::parse(raw_value);
    } catch (const nlohmann::json::exception&) {
      v = raw_value;
    }
    try {
      assign(key, v);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ConfigError, "config key '" + key + "': " + e.what());
    }
  }

  /// Applies `key=value` (also accepts `key = value`).
  void set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, "expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  static ExperimentConfig parse(std::istream& is) {
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const auto hash = find_comment(line);
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.find('=') == std::string::npos) {
        fail(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
      }
      cfg.set_assignment(line);
    }
    return cfg;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::ConfigError, "cannot open config file " + path.string());
    return parse(is);
  }

  /// Checks the invariants; call after all overrides are applied.
  void validate() const {
    if (!seed) fail(ErrorCode::ConfigError, "seed is required (config key `seed` or --seed)");
    if (groups.empty() == degree_file.empty()) {
      fail(ErrorCode::ConfigError, "exactly one of `groups` and `degree_file` must be given");
    }
    const std::pair<const char*, std::uint64_t> counts[] = {
        {"n_env", n_env},           {"start_k", start_k},         {"t_max", t_max},
        {"mc_samples", mc_samples}, {"pool_size", pool_size},     {"pool_iterations", pool_iterations},
        {"mstar_samples", mstar_samples}, {"n_trees", n_trees}, {"tree_t_max", tree_t_max}};
    for (const auto& [name, value] : counts) {
      if (value < 1) fail(ErrorCode::ConfigError, std::string(name) + " must be >= 1");
    }
    if (start_policy != "auto" && start_policy != "full" && start_policy != "sampled") {
      fail(ErrorCode::ConfigError, "start_policy must be auto, full or sampled");
    }
    if (target != "exact" && target != "proxy") fail(ErrorCode::ConfigError, "target must be exact or proxy");
    if (!(window_half_width > 0.0)) fail(ErrorCode::ConfigError, "window_half_width must be > 0");
    if (!(bin_width > 0.0)) fail(ErrorCode::ConfigError, "bin_width must be > 0");
    if (pool_size < 1000) fail(ErrorCode::ConfigError, "pool_size must be >= 1000");
  }

  /// One `key = value` line per setting in a fixed order. The output
  /// directory is excluded: it does not change results.
  std::string canonical() const {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& x : groups) g.push_back({x.count, x.in, x.out});
    std::ostringstream os;
    os << "groups = " << g.dump() << '\n'
       << "degree_file = " << nlohmann::json(degree_file).dump() << '\n'
       << "seed = " << (seed ? std::to_string(*seed) : "null") << '\n'
       << "n_env = " << n_env << '\n'
       << "start_policy = " << nlohmann::json(start_policy).dump() << '\n'
       << "start_k = " << start_k << '\n'
       << "start_lowest = " << start_lowest << '\n'
       << "t_max = " << t_max << '\n'
       << "window_half_width = " << nlohmann::json(window_half_width).dump() << '\n'
       << "target = " << nlohmann::json(target).dump() << '\n'
       << "mc_samples = " << mc_samples << '\n'
       << "pool_size = " << pool_size << '\n'
       << "pool_iterations = " << pool_iterations << '\n'
       << "mstar_samples = " << mstar_samples << '\n'
       << "n_trees = " << n_trees << '\n'
       << "tree_t_max = " << tree_t_max << '\n'
       << "renormalize = " << (renormalize ? "true" : "false") << '\n'
       << "bin_width = " << nlohmann::json(bin_width).dump() << '\n'
       << "resample_cap = " << resample_cap << '\n';
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }

  std::string hash_hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash();
    return os.str();
  }

  /// `# config_hash=<16 hex digits> seed=<seed>`
  std::string header_line() const {
    return "# config_hash=" + hash_hex() + " seed=" + std::to_string(seed.value_or(0));
  }

  DegreeSequence degree_sequence() const {
    if (!groups.empty()) return DegreeSequence::from_groups(groups);
    std::ifstream is(degree_file);
    if (!is) fail(ErrorCode::ConfigError, "cannot open degree file " + degree_file);
    return read_degree_file(is);
  }

  StartPolicy starts() const {
    StartPolicy p;
    p.kind = start_policy == "full"      ? StartPolicy::Kind::full
             : start_policy == "sampled" ? StartPolicy::Kind::sampled
                                         : StartPolicy::Kind::automatic;
    p.sample_size = start_k;
    p.lowest = start_lowest;
    return p;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  // First '#' outside a double-quoted string.
  static std::size_t find_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '"' && (k == 0 || line[k - 1] != '\\')) quoted = !quoted;
      if (line[k] == '#' && !quoted) return k;
    }
    return std::string::npos;
  }

  static std::uint64_t count_value(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned()) {
      fail(ErrorCode::ConfigError, "config key '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  void assign(const std::string& key, const nlohmann::json& v) {
    if (key == "groups") {
      if (!v.is_array()) fail(ErrorCode::ConfigError, "groups must be an array of [count, d_minus, d_plus]");
      groups.clear();
      for (const auto& g : v) {
        if (!g.is_array() || g.size() != 3) {
          fail(ErrorCode::ConfigError, "each group must be [count, d_minus, d_plus]");
        }
        const auto count = count_value(g[0], "groups");
        const auto in = count_value(g[1], "groups");
        const auto out = count_value(g[2], "groups");
        if (in > UINT32_MAX || out > UINT32_MAX) fail(ErrorCode::ConfigError, "degree out of range");
        groups.push_back({count, static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(out)});
      }
    } else if (key == "degree_file") {
      degree_file = v.get<std::string>();
    } else if (key == "seed") {
      seed = count_value(v, key);
    } else if (key == "n_env") {
      n_env = count_value(v, key);
    } else if (key == "start_policy") {
      start_policy = v.get<std::string>();
    } else if (key == "start_k") {
      start_k = count_value(v, key);
    } else if (key == "start_lowest") {
      start_lowest = count_value(v, key);
    } else if (key == "t_max") {
      t_max = count_value(v, key);
    } else if (key == "window_half_width") {
      window_half_width = v.get<double>();
    } else if (key == "target") {
      target = v.get<std::string>();
    } else if (key == "mc_samples") {
      mc_samples = count_value(v, key);
    } else if (key == "pool_size") {
      pool_size = count_value(v, key);
    } else if (key == "pool_iterations") {
      pool_iterations = count_value(v, key);
    } else if (key == "mstar_samples") {
      mstar_samples = count_value(v, key);
    } else if (key == "n_trees") {
      n_trees = count_value(v, key);
    } else if (key == "tree_t_max") {
      tree_t_max = count_value(v, key);
    } else if (key == "renormalize") {
      renormalize = v.get<bool>();
    } else if (key == "bin_width") {
      bin_width = v.get<double>();
    } else if (key == "resample_cap") {
      resample_cap = count_value(v, key);
    } else if (key == "out") {
      out = v.get<std::string>();
    } else {
      fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
  }
};

struct ConnectedSample {
  Environment env;
  std::uint64_t rejections = 0;
};

/// Draws environments with seeds derive_seed(seed, attempt) until one is
/// strongly connected. Fails with ResampleCapExceeded after cap rejections.
inline ConnectedSample sample_connected(const DegreeSequence& seq, std::uint64_t seed, std::uint64_t cap) {
  for (std::uint64_t attempt = 0; attempt <= cap; ++attempt) {
    Environment env = sample_environment(seq, derive_seed(seed, attempt));
    if (strongly_connected(env)) return {std::move(env), attempt};
  }
  fail(ErrorCode::ResampleCapExceeded,
       "no strongly connected sample within " + std::to_string(cap) + " resamples");
}

/// Writes `path` through a temporary sibling and a rename, so readers never
/// see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    body(os);
    os.flush();
    if (!os) fail(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResampleCap = 3;
inline constexpr int kExitVerifyFailed = 4;

/// Exit status for a library failure.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::Parse:
    case ErrorCode::SumMismatch:
    case ErrorCode::ZeroDegree:
    case ErrorCode::EmptySequence:
      return kExitConfig;
    case ErrorCode::ResampleCapExceeded:
      return kExitResampleCap;
    default:
      return kExitOther;
  }
}

}  // namespace cutoff
