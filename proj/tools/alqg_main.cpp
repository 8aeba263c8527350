// alqg: experiment runner for the adaptive LQG control library.
//
// Subcommands:
//   run    -- integrate the closed loop under the adaptive law and write
//             trajectory.csv / summary.json / events.csv / plot.gp
//   oracle -- solve the true-model Riccati equation and print the optimal
//             ergodic cost as JSON
//   audit  -- cross-check the stabilizability certificate against the PBH
//             rank test on random and constructed pairs

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "alqg/artifacts.hpp"
#include "alqg/audit.hpp"
#include "alqg/config.hpp"
#include "alqg/matkit.hpp"
#include "alqg/riccati.hpp"
#include "alqg/simloop.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct RunOverrides {
  std::optional<std::uint64_t> seed_w, seed_v, seed_eta;
  std::optional<std::string> out;
  std::optional<double> T, h;
};

void apply_overrides(alqg::cli::RunConfig& cfg, const RunOverrides& ov) {
  if (ov.seed_w) cfg.seed_w = *ov.seed_w;
  if (ov.seed_v) cfg.seed_v = *ov.seed_v;
  if (ov.seed_eta) cfg.seed_eta = *ov.seed_eta;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.T) cfg.T = *ov.T;
  if (ov.h) cfg.h = *ov.h;
  if (const char* env = std::getenv("ALQG_OUT")) cfg.out_dir = env;
}

int execute_run(const alqg::cli::RunConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const alqg::sim::RunRecord rec = alqg::sim::simulate(cfg.model(), cfg.options());
  const std::string hash = alqg::cli::config_hash(cfg);
  alqg::cli::write_trajectory_csv(rec, cfg.n, cfg.m, out_dir + "/trajectory.csv");
  alqg::cli::write_events_csv(rec, out_dir + "/events.csv");
  alqg::cli::write_summary_json(rec, hash, out_dir + "/summary.json");
  alqg::cli::write_plot_script(rec, cfg.n, cfg.m, out_dir + "/plot.gp");

  if (rec.aborted) {
    std::cerr << "run aborted at t=" << rec.T_final << ": " << rec.abort_reason << "\n";
    return kExitNumerical;
  }
  std::cout << "run complete: J_hat=" << rec.J_hat << " J_star=" << rec.J_star
            << " artifacts in " << out_dir << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const RunOverrides& ov,
            const std::optional<std::string>& seeds_range) {
  alqg::cli::RunConfig cfg = alqg::cli::load_config(config_path);
  apply_overrides(cfg, ov);
  alqg::cli::validate_config(cfg);

  if (!seeds_range) return execute_run(cfg, cfg.out_dir);

  // Batch mode: "a..b" runs one independent simulation per seed offset, in
  // per-run directories to keep file writes disjoint.
  const auto dots = seeds_range->find("..");
  if (dots == std::string::npos)
    throw alqg::cli::ConfigError("--seeds expects a range of the form a..b");
  const long lo = std::stol(seeds_range->substr(0, dots));
  const long hi = std::stol(seeds_range->substr(dots + 2));
  if (hi < lo) throw alqg::cli::ConfigError("--seeds range is empty");

  std::vector<int> codes(static_cast<std::size_t>(hi - lo + 1), kExitOk);
  std::vector<std::thread> pool;
  const unsigned max_threads = std::max(1u, std::thread::hardware_concurrency());
  for (long s = lo; s <= hi; ++s) {
    pool.emplace_back([&, s] {
      alqg::cli::RunConfig local = cfg;
      local.seed_w = cfg.seed_w + static_cast<std::uint64_t>(s);
      local.seed_v = cfg.seed_v + static_cast<std::uint64_t>(s);
      local.seed_eta = cfg.seed_eta + static_cast<std::uint64_t>(s);
      const std::string dir = cfg.out_dir + "/seed_" + std::to_string(s);
      try {
        codes[static_cast<std::size_t>(s - lo)] = execute_run(local, dir);
      } catch (const std::exception& e) {
        std::cerr << "seed " << s << " failed: " << e.what() << "\n";
        codes[static_cast<std::size_t>(s - lo)] = kExitConfig;
      }
    });
    if (pool.size() == max_threads || s == hi) {
      for (auto& th : pool) th.join();
      pool.clear();
    }
  }
  int worst = kExitOk;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

int cmd_oracle(const std::string& config_path) {
  alqg::cli::RunConfig cfg = alqg::cli::load_config(config_path);
  alqg::cli::validate_config(cfg);

  const alqg::riccati::CareSolution sol =
      alqg::riccati::solve_care({cfg.A, cfg.B, cfg.Q, cfg.R}, cfg.care_tol);
  const alqg::matkit::Spectrum cl = alqg::matkit::spectrum(cfg.A + cfg.B * sol.L);

  nlohmann::json j;
  j["J_star"] = (cfg.D.transpose() * sol.X * cfg.D).trace();
  j["residual"] = sol.residual_norm;
  j["closed_loop_margin"] = sol.closed_loop_margin;
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& ev : cl.eigenvalues) eig.push_back({ev.real(), ev.imag()});
  j["closed_loop_eigenvalues"] = eig;
  std::vector<double> xflat;
  for (int i = 0; i < sol.X.rows(); ++i)
    for (int c = 0; c < sol.X.cols(); ++c) xflat.push_back(sol.X(i, c));
  j["X"] = xflat;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_audit(long samples, std::uint64_t seed) {
  const alqg::cli::AuditReport report = alqg::cli::run_audit(samples, seed);
  nlohmann::json j;
  j["samples"] = report.total();
  j["both_positive"] = report.both_positive;
  j["both_negative"] = report.both_negative;
  j["certificate_only"] = report.cert_only;
  j["pbh_only"] = report.pbh_only;
  j["disagreements"] = report.disagreements;
  std::cout << j.dump(2) << "\n";
  return report.disagreement_count() == 0 ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive LQG control experiment runner"};
  app.set_help_flag("--help", "print help");  // frees -h / --h for the step size
  app.require_subcommand(1);

  std::string config_path;
  RunOverrides ov;
  std::optional<std::string> seeds_range;

  CLI::App* run = app.add_subcommand("run", "simulate the adaptive closed loop");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--seed-w", ov.seed_w, "plant-noise seed override");
  run->add_option("--seed-v", ov.seed_v, "excitation seed override");
  run->add_option("--seed-eta", ov.seed_eta, "regularizer seed override");
  run->add_option("--out", ov.out, "output directory override");
  run->add_option("--T", ov.T, "horizon override");
  run->add_option("--h", ov.h, "step-size override");
  run->add_option("--seeds", seeds_range, "batch range a..b of seed offsets");

  std::string oracle_config;
  CLI::App* oracle = app.add_subcommand("oracle", "print the true-model optimal cost");
  oracle->add_option("--config", oracle_config, "JSON run configuration")->required();

  long audit_samples = 1000;
  std::uint64_t audit_seed = 1;
  CLI::App* audit = app.add_subcommand("audit", "certificate vs PBH agreement report");
  audit->add_option("--samples", audit_samples, "number of random pairs");
  audit->add_option("--seed", audit_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, ov, seeds_range);
    if (oracle->parsed()) return cmd_oracle(oracle_config);
    if (audit->parsed()) return cmd_audit(audit_samples, audit_seed);
  } catch (const alqg::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
