// Command-line front end: stats, gen, profile, equilibrium, limits, verify.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cutoff/cutoff.hpp"
#include "cutoff/verify/acceptance.hpp"

namespace fs = std::filesystem;
using namespace cutoff;

namespace {

// Stream tags under the master seed.
constexpr std::uint64_t kEnvStream = 0;
constexpr std::uint64_t kRdeStream = 1;
constexpr std::uint64_t kMStarStream = 2;
constexpr std::uint64_t kTreeStream = 3;
constexpr std::uint64_t kStartStream = 5;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
  std::vector<std::string> overrides;
};

ExperimentConfig load_config(const Flags& f, bool need_sequence = true) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = ExperimentConfig::load(f.config_path);
  for (const auto& o : f.overrides) cfg.set_assignment(o);
  if (f.seed) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (need_sequence) {
    cfg.validate();
  } else if (!cfg.seed) {
    fail(ErrorCode::ConfigError, "seed is required (config key `seed` or --seed)");
  }
  return cfg;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

class Manifest {
 public:
  Manifest(const ExperimentConfig& cfg, std::string command) : cfg_(cfg) {
    j_["command"] = std::move(command);
    j_["config_hash"] = cfg.hash_hex();
    j_["seed"] = *cfg.seed;
    j_["config"] = cfg.canonical();
    j_["files"] = nlohmann::json::array();
  }

  // Writes `name` under the output directory with the comment header first.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    write_file_atomic(fs::path(cfg_.out) / name, [&](std::ostream& os) {
      os << cfg_.header_line() << '\n';
      body(os);
    });
    j_["files"].push_back(name);
  }

  nlohmann::json& json() { return j_; }

  void finish() {
    const std::string text = j_.dump(2) + "\n";
    write_file_atomic(fs::path(cfg_.out) / "manifest.json", [&](std::ostream& os) { os << text; });
  }

 private:
  const ExperimentConfig& cfg_;
  nlohmann::json j_;
};

std::vector<ConnectedSample> sample_environments(const ExperimentConfig& cfg, const DegreeSequence& seq,
                                                 Manifest& manifest) {
  std::vector<ConnectedSample> out;
  nlohmann::json rejections = nlohmann::json::array();
  for (std::uint64_t e = 0; e < cfg.n_env; ++e) {
    out.push_back(sample_connected(seq, derive_seed(*cfg.seed, kEnvStream, e), cfg.resample_cap));
    rejections.push_back(out.back().rejections);
  }
  manifest.json()["rejections"] = rejections;
  return out;
}

int cmd_stats(const Flags& f) {
  const auto cfg = load_config(f);
  const auto seq = cfg.degree_sequence();
  const auto s = compute_stats(seq);
  const auto diag = window_diagnostic(s, seq.size());
  std::ostringstream os;
  os << "n = " << seq.size() << '\n'
     << "m = " << seq.arcs() << '\n'
     << "mu = " << fmt(s.mu) << '\n'
     << "sigma2 = " << fmt(s.sigma2) << '\n'
     << "rho = " << fmt(s.rho) << '\n'
     << "gamma = " << fmt(s.gamma) << '\n'
     << "t_star = " << fmt(s.t_star) << '\n'
     << "w_star = " << fmt(s.w_star) << '\n'
     << "delta = " << s.delta << '\n'
     << "delta_max = " << s.delta_max << '\n'
     << "sparse = " << (seq.sparse_ok() ? "yes" : "no") << '\n';
  try {
    os << "h = " << tree_horizon(seq) << '\n';
  } catch (const Error& e) {
    os << "h = undefined (" << e.what() << ")\n";
  }
  os << "window_condition_lhs = " << fmt(diag.lhs) << '\n'
     << "window_condition_rhs = " << fmt(diag.rhs) << '\n'
     << "window_condition = " << (diag.applicable ? (diag.weak ? "weak" : "holds") : "n/a") << '\n';
  std::cout << cfg.header_line() << '\n' << os.str();
  Manifest manifest(cfg, "stats");
  manifest.write("stats.txt", [&](std::ostream& o) { o << os.str(); });
  manifest.finish();
  return kExitOk;
}

int cmd_gen(const Flags& f) {
  const auto cfg = load_config(f);
  const auto seq = cfg.degree_sequence();
  Manifest manifest(cfg, "gen");
  const auto envs = sample_environments(cfg, seq, manifest);
  std::ostringstream summary;
  summary << "env,seed,rejections,collisions,loops,multi_arcs,v_star_size,escape_max\n";
  int h = 0;
  try {
    h = tree_horizon(seq);
  } catch (const Error&) {
    h = 0;
  }
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const auto& env = envs[e].env;
    manifest.write("env_" + std::to_string(e) + ".txt", [&](std::ostream& os) { write_environment(os, env); });
    const auto trace = sample_with_collision_trace(seq, env.seed(), seq.arcs()).second;
    const auto mg = multigraph_counts(env);
    const auto vs = v_star(env);
    const auto esc = escape_probabilities(env, vs, h);
    summary << e << ',' << env.seed() << ',' << envs[e].rejections << ',' << trace.collisions << ',' << mg.loops << ','
            << mg.multi_arcs << ',' << vs.size() << ',' << fmt(esc.back()) << '\n';
  }
  manifest.write("gen_summary.csv", [&](std::ostream& os) { os << summary.str(); });
  std::cout << summary.str();
  manifest.finish();
  return kExitOk;
}

int cmd_profile(const Flags& f) {
  const auto cfg = load_config(f);
  const auto seq = cfg.degree_sequence();
  Manifest manifest(cfg, "profile");
  const auto envs = sample_environments(cfg, seq, manifest);
  std::vector<WalkProfile> profiles;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const auto& env = envs[e].env;
    const Distribution target = cfg.target == "exact" ? equilibrium(env).pi : proxy_equilibrium(env);
    const auto starts = select_starts(env, target, cfg.starts(), derive_seed(*cfg.seed, kStartStream, e));
    profiles.push_back(distance_profile(env, starts, static_cast<int>(cfg.t_max), target, f.jobs));
    manifest.write("profile_matrix_" + std::to_string(e) + ".csv",
                   [&](std::ostream& os) { write_profile_matrix_csv(os, profiles.back()); });
  }
  const auto pooled = pool_profiles(profiles);
  manifest.write("profile.csv", [&](std::ostream& os) { write_profile_csv(os, pooled); });
  try {
    const auto report = window_profile_check(pooled, compute_stats(seq), cfg.window_half_width);
    manifest.write("window.csv", [&](std::ostream& os) { write_window_csv(os, report); });
    manifest.json()["sup_gap"] = report.sup_gap;
    std::cout << "sup_gap = " << fmt(report.sup_gap) << '\n';
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateWindow) throw;
    std::cerr << "window check skipped: " << e.what() << '\n';
    manifest.json()["window"] = "degenerate";
  }
  manifest.finish();
  return kExitOk;
}

int cmd_equilibrium(const Flags& f) {
  const auto cfg = load_config(f);
  const auto seq = cfg.degree_sequence();
  const auto stats = compute_stats(seq);
  Manifest manifest(cfg, "equilibrium");
  const auto envs = sample_environments(cfg, seq, manifest);
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const auto& env = envs[e].env;
    const auto eq = equilibrium(env);
    const auto pool = equilibrium_weight_pool(env, eq.pi);
    const std::string tag = std::to_string(e);
    manifest.write("equilibrium_pool_" + tag + ".csv", [&](std::ostream& os) { write_pool_csv(os, pool); });
    manifest.write("histogram_" + tag + ".csv",
                   [&](std::ostream& os) { write_histogram_csv(os, histogram(pool, cfg.bin_width)); });
    manifest.write("exp_bound_" + tag + ".csv", [&](std::ostream& os) {
      os << "t,tv,bound\n";
      Distribution pi = in_degree_distribution(env);
      for (int t = 0; t <= static_cast<int>(cfg.t_max); ++t) {
        if (t > 0) pi = step(pi);
        os << t << ',' << fmt(tv_distance(pi, eq.pi)) << ',';
        if (stats.rho < 1.0) {
          os << fmt(exponential_bound(stats, seq.size(), seq.arcs(), t)) << '\n';
        } else {
          os << "nan\n";
        }
      }
    });
    const double proxy_tv = tv_distance(proxy_equilibrium(env), eq.pi);
    runs.push_back({{"env", e},
                    {"iterations", eq.iterations},
                    {"residual", eq.residual},
                    {"cesaro_fallback", eq.cesaro_fallback},
                    {"proxy_tv", proxy_tv}});
    std::cout << "env " << e << ": iterations = " << eq.iterations << ", residual = " << fmt(eq.residual)
              << ", cesaro_fallback = " << (eq.cesaro_fallback ? "yes" : "no") << ", ||pi_h - pi_star|| = " << fmt(proxy_tv)
              << '\n';
  }
  manifest.json()["runs"] = runs;
  manifest.finish();
  return kExitOk;
}

int cmd_limits(const Flags& f) {
  const auto cfg = load_config(f);
  const auto seq = cfg.degree_sequence();
  const auto stats = compute_stats(seq);
  Manifest manifest(cfg, "limits");

  RdeOptions rde_opts;
  rde_opts.renormalize = cfg.renormalize;
  const auto rde = sample_rde(seq, cfg.pool_size, cfg.pool_iterations, derive_seed(*cfg.seed, kRdeStream), rde_opts);
  manifest.write("z_pool.csv", [&](std::ostream& os) { write_pool_csv(os, rde.pool); });
  manifest.write("rde_trace.csv", [&](std::ostream& os) {
    os << "iteration,mean,std_error,w1_step\n";
    for (std::size_t k = 0; k < rde.means.size(); ++k) {
      os << k + 1 << ',' << fmt(rde.means[k].mean) << ',' << fmt(rde.means[k].std_error) << ',' << fmt(rde.w1_steps[k])
         << '\n';
    }
  });
  const auto m_star = sample_m_star(seq, rde.pool, cfg.mstar_samples, derive_seed(*cfg.seed, kMStarStream));
  manifest.write("mstar_pool.csv", [&](std::ostream& os) { write_pool_csv(os, m_star); });
  manifest.write("mstar_histogram.csv",
                 [&](std::ostream& os) { write_histogram_csv(os, histogram(m_star, cfg.bin_width)); });

  const int t_max = static_cast<int>(cfg.tree_t_max);
  MartingaleOptions mopts;
  mopts.jobs = f.jobs;
  const auto tree = simulate_martingale(seq, t_max, cfg.n_trees, derive_seed(*cfg.seed, kTreeStream), mopts);
  manifest.write("martingale.csv", [&](std::ostream& os) {
    os << "t,mean,std_error,increment_mean,increment_se,gap_mean,gap_se,gap_predicted,sigma_mean,sigma_predicted\n";
    const auto last = tree.pools[t_max].values();
    std::vector<double> buf(cfg.n_trees);
    for (int t = 0; t <= t_max; ++t) {
      const auto cur = tree.pools[t].values();
      const auto m = mean_and_se(cur);
      MeanEstimate inc{0.0, 0.0};
      if (t < t_max) {
        const auto nxt = tree.pools[t + 1].values();
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = nxt[k] - cur[k];
        inc = mean_and_se(buf);
      }
      for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = (last[k] - cur[k]) * (last[k] - cur[k]);
      const auto gap = mean_and_se(buf);
      const auto sig = mean_and_se(tree.sigma[t]);
      os << t << ',' << fmt(m.mean) << ',' << fmt(m.std_error) << ',' << fmt(inc.mean) << ',' << fmt(inc.std_error) << ','
         << fmt(gap.mean) << ',' << fmt(gap.std_error) << ','
         << fmt(predicted_martingale_gap(stats, seq.size(), seq.arcs(), t, t_max)) << ',' << fmt(sig.mean) << ','
         << fmt(predicted_sigma(stats, seq.size(), seq.arcs(), t)) << '\n';
    }
  });

  const auto envs = sample_environments(cfg, seq, manifest);
  std::ostringstream table;
  table << "env,seed,w1_m_star,w1_m_tmax\n";
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const auto& env = envs[e].env;
    const auto graph_pool = equilibrium_weight_pool(env, equilibrium(env).pi);
    table << e << ',' << env.seed() << ',' << fmt(wasserstein1(graph_pool, m_star)) << ','
          << fmt(wasserstein1(graph_pool, tree.pools[t_max])) << '\n';
  }
  manifest.write("w1.csv", [&](std::ostream& os) { os << table.str(); });
  std::cout << table.str();
  manifest.finish();
  return kExitOk;
}

int cmd_verify(const Flags& f) {
  const auto cfg = load_config(f, false);
  acceptance::Options opts;
  opts.seed = *cfg.seed;
  opts.jobs = f.jobs;
  const auto report = acceptance::run_full_acceptance(opts);
  const std::string text = report.text();
  std::cout << text;
  if (!f.out.empty()) {
    write_file_atomic(fs::path(f.out) / "verify_report.txt", [&](std::ostream& os) {
      os << "# seed=" << opts.seed << '\n' << text;
    });
  }
  return report.criteria_passed() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on random directed graphs: cutoff, equilibrium and limit laws"};
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "Config file (key = value lines)");
    sub->add_option("--seed", seed, "Master seed (required unless set in the config)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--jobs", flags.jobs, "Worker threads; affects speed only")->check(CLI::PositiveNumber);
    sub->add_option("--set", flags.overrides, "Override a config key: key=value (repeatable)");
  };
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Entry entries[] = {
      {"stats", "Degree statistics, t_star, w_star and the window condition", cmd_stats},
      {"gen", "Sample environments and write graph files", cmd_gen},
      {"profile", "Distance-to-equilibrium profile and window comparison", cmd_profile},
      {"equilibrium", "Equilibrium pools, histograms and the exponential bound table", cmd_equilibrium},
      {"limits", "Fixed-point pools, martingale table and Wasserstein distances", cmd_limits},
      {"verify", "Run the acceptance suite", cmd_verify},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    subs.push_back(app.add_subcommand(e.name, e.help));
    add_common(subs.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    if (subs[k]->count("--seed") > 0) flags.seed = seed;
    try {
      return entries[k].run(flags);
    } catch (const Error& e) {
      std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
      return exit_code_for(e.code());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitOther;
    }
  }
  return kExitOther;
}
