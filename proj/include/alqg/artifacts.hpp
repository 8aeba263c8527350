#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "alqg/config.hpp"
#include "alqg/simloop.hpp"

namespace alqg::cli {

/// 17-significant-digit rendering, enough to round-trip doubles so re-runs
/// produce byte-identical artifacts.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // fixed '\n' endings everywhere
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

/// trajectory.csv: t, state, control, then the six fixed metrics.
inline void write_trajectory_csv(const sim::RunRecord& rec, int n, int m,
                                 const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x_" << i;
  for (int i = 0; i < m; ++i) out << ",u_" << i;
  out << ",cost_integrand,running_avg_cost,theta_err_full,theta_err_masked,r,log_f\n";
  for (std::size_t row = 0; row < rec.t.size(); ++row) {
    out << fmt17(rec.t[row]);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(rec.x[row][i]);
    for (int i = 0; i < m; ++i) out << ',' << fmt17(rec.u[row][i]);
    out << ',' << fmt17(rec.cost_integrand[row]) << ',' << fmt17(rec.running_avg_cost[row])
        << ',' << fmt17(rec.theta_err_full[row]) << ',' << fmt17(rec.theta_err_masked[row])
        << ',' << fmt17(rec.r[row]) << ',' << fmt17(rec.log_f[row]) << '\n';
  }
}

/// events.csv: one row per unit interval covering the regularizer decision
/// and the gain refresh.
inline void write_events_csv(const sim::RunRecord& rec, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "k,switched,degenerate,fallback,log_f_eta,log_f_prev,log_f,gain_delta,"
         "closed_loop_margin\n";
  for (const auto& ev : rec.intervals) {
    out << ev.k << ',' << (ev.switched ? 1 : 0) << ',' << (ev.degenerate ? 1 : 0) << ','
        << (ev.fell_back ? 1 : 0) << ',' << fmt17(ev.log_f_eta) << ',' << fmt17(ev.log_f_prev)
        << ',' << fmt17(ev.log_f) << ',' << fmt17(ev.gain_delta) << ','
        << fmt17(ev.closed_loop_margin) << '\n';
  }
}

inline nlohmann::json summary_json(const sim::RunRecord& rec, const std::string& cfg_hash) {
  nlohmann::json j;
  j["J_hat"] = rec.J_hat;
  j["J_star"] = rec.J_star;
  j["theta_err_full"] = rec.theta_err_full_final;
  j["theta_err_masked"] = rec.theta_err_masked_final;
  j["stability_stat"] = sim::stability_statistic(rec);
  j["beta_switches"] = rec.beta_switches;
  j["fallback_intervals"] = rec.fallback_intervals;
  j["seeds"] = {{"w", rec.seed_w}, {"v", rec.seed_v}, {"eta", rec.seed_eta}};
  j["config_hash"] = cfg_hash;
  j["T_final"] = rec.T_final;
  j["max_x_norm"] = rec.max_x_norm;
  j["avg_x2"] = rec.avg_x2;
  j["degenerate_intervals"] = rec.degenerate_intervals;
  j["oracle_mode"] = rec.oracle_mode;
  j["aborted"] = rec.aborted;
  j["abort_reason"] = rec.abort_reason;
  return j;
}

inline void write_summary_json(const sim::RunRecord& rec, const std::string& cfg_hash,
                               const std::string& path) {
  std::ofstream out = open_out(path);
  out << summary_json(rec, cfg_hash).dump(2) << '\n';
}

/// Self-contained gnuplot script rendering the logged trajectory next to the
/// oracle cost level.
inline void write_plot_script(const sim::RunRecord& rec, int n, int m,
                              const std::string& path) {
  std::ofstream out = open_out(path);
  out << "# gnuplot script; run from the directory containing trajectory.csv\n";
  out << "set datafile separator ','\n";
  out << "set key autotitle columnhead\n";
  out << "set terminal pngcairo size 1400,900\n";
  out << "set output 'trajectory.png'\n";
  out << "set multiplot layout 2,2\n";
  out << "set title 'state'\n";
  out << "plot";
  for (int i = 0; i < n; ++i) out << (i ? ", " : " ") << "'trajectory.csv' using 1:" << (2 + i)
                                  << " with lines";
  out << "\n";
  out << "set title 'control'\n";
  out << "plot";
  for (int i = 0; i < m; ++i)
    out << (i ? ", " : " ") << "'trajectory.csv' using 1:" << (2 + n + i) << " with lines";
  out << "\n";
  const int cost_col = 2 + n + m + 1;  // running_avg_cost
  out << "set title 'running average cost vs oracle'\n";
  out << "plot 'trajectory.csv' using 1:" << cost_col << " with lines, " << fmt17(rec.J_star)
      << " with lines title 'J*'\n";
  const int err_col = cost_col + 2;  // theta_err_masked
  out << "set title 'estimate errors'\n";
  out << "set logscale y\n";
  out << "plot 'trajectory.csv' using 1:" << (err_col - 1)
      << " with lines, 'trajectory.csv' using 1:" << err_col << " with lines\n";
  out << "unset multiplot\n";
}

}  // namespace alqg::cli
