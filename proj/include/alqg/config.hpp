#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "alqg/matkit.hpp"
#include "alqg/simloop.hpp"
#include "alqg/stabcheck.hpp"
#include "alqg/theta.hpp"

namespace alqg::cli {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat typed-key run configuration. Matrices are row-major arrays with the
/// dimensions given by n, m, p.
struct RunConfig {
  int n = 0, m = 0, p = 0;
  Eigen::MatrixXd A, B, D, Q, R;
  Eigen::VectorXd x0;
  double T = 100.0;
  double h = 1e-3;
  std::uint64_t seed_w = 1, seed_v = 2, seed_eta = 3;
  double gamma_reg = 1.2;
  double excitation_exponent = 0.2;
  Eigen::MatrixXd theta0_A, theta0_B;  // defaults: -I and leading identity columns
  double rank_tol = 1e-8;
  double care_tol = 1e-9;
  std::string out_dir = "out";
  long decimation = 0;
  double blowup_cap = 1e8;

  sim::SystemModel model() const {
    return sim::SystemModel{A, B, D, Q, R, x0};
  }

  sim::RunOptions options() const {
    sim::RunOptions opt;
    opt.T = T;
    opt.h = h;
    opt.seed_w = seed_w;
    opt.seed_v = seed_v;
    opt.seed_eta = seed_eta;
    opt.gamma_reg = gamma_reg;
    opt.excitation_exponent = excitation_exponent;
    opt.theta0 = pack_theta(theta0_A, theta0_B);
    opt.rank_tol = rank_tol;
    opt.care_tol = care_tol;
    opt.decimation = decimation;
    opt.blowup_cap = blowup_cap;
    return opt;
  }
};

namespace detail {

inline Eigen::MatrixXd parse_matrix(const nlohmann::json& j, const std::string& key, int rows,
                                    int cols) {
  if (!j.contains(key)) throw ConfigError("config: missing key '" + key + "'");
  const auto& arr = j.at(key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != rows * cols)
    throw ConfigError("config: '" + key + "' must be a flat array of " +
                      std::to_string(rows * cols) + " numbers (row-major " +
                      std::to_string(rows) + "x" + std::to_string(cols) + ")");
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) M(i, c) = arr.at(i * cols + c).get<double>();
  return M;
}

template <typename T>
inline T value_or(const nlohmann::json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline std::string complex_str(std::complex<double> z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.n = j.at("n").get<int>();
    cfg.m = j.at("m").get<int>();
    cfg.p = j.at("p").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad or missing dimensions n/m/p: ") + e.what());
  }
  if (cfg.n < 1 || cfg.m < 1 || cfg.p < 1)
    throw ConfigError("config: dimensions n, m, p must be positive");

  cfg.A = detail::parse_matrix(j, "A", cfg.n, cfg.n);
  cfg.B = detail::parse_matrix(j, "B", cfg.n, cfg.m);
  cfg.D = detail::parse_matrix(j, "D", cfg.n, cfg.p);
  cfg.Q = detail::parse_matrix(j, "Q", cfg.n, cfg.n);
  cfg.R = detail::parse_matrix(j, "R", cfg.m, cfg.m);
  cfg.x0 = j.contains("x0") ? Eigen::VectorXd(detail::parse_matrix(j, "x0", cfg.n, 1))
                            : Eigen::VectorXd(Eigen::VectorXd::Zero(cfg.n));

  cfg.T = detail::value_or(j, "T", cfg.T);
  cfg.h = detail::value_or(j, "h", cfg.h);
  cfg.seed_w = detail::value_or<std::uint64_t>(j, "seed_w", cfg.seed_w);
  cfg.seed_v = detail::value_or<std::uint64_t>(j, "seed_v", cfg.seed_v);
  cfg.seed_eta = detail::value_or<std::uint64_t>(j, "seed_eta", cfg.seed_eta);
  cfg.gamma_reg = detail::value_or(j, "gamma_reg", cfg.gamma_reg);
  cfg.excitation_exponent = detail::value_or(j, "excitation_exponent", cfg.excitation_exponent);
  cfg.rank_tol = detail::value_or(j, "rank_tol", cfg.rank_tol);
  cfg.care_tol = detail::value_or(j, "care_tol", cfg.care_tol);
  cfg.out_dir = detail::value_or<std::string>(j, "out_dir", cfg.out_dir);
  cfg.decimation = detail::value_or<long>(j, "decimation", cfg.decimation);
  cfg.blowup_cap = detail::value_or(j, "blowup_cap", cfg.blowup_cap);

  cfg.theta0_A = j.contains("theta0_A")
                     ? detail::parse_matrix(j, "theta0_A", cfg.n, cfg.n)
                     : Eigen::MatrixXd(-Eigen::MatrixXd::Identity(cfg.n, cfg.n));
  cfg.theta0_B = j.contains("theta0_B")
                     ? detail::parse_matrix(j, "theta0_B", cfg.n, cfg.m)
                     : Eigen::MatrixXd(Eigen::MatrixXd::Identity(cfg.n, cfg.m));
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse failure in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

/// Structural and model validation: dimension consistency, parameter ranges,
/// and the standing stabilizability/detectability assumption on the true
/// plant (refused with the failing eigenvalue named).
inline void validate_config(const RunConfig& cfg) {
  if (!(cfg.T >= 1.0)) throw ConfigError("config: T must be >= 1");
  if (!(cfg.h > 0.0 && cfg.h <= 0.1)) throw ConfigError("config: h must lie in (0, 0.1]");
  if (!(cfg.gamma_reg > 1.0 && cfg.gamma_reg < std::sqrt(2.0)))
    throw ConfigError("config: gamma_reg must lie in (1, sqrt(2))");
  if (!(cfg.excitation_exponent > 0.0))
    throw ConfigError("config: excitation_exponent must be positive");
  if (!(cfg.blowup_cap > 0.0)) throw ConfigError("config: blowup_cap must be positive");
  if (cfg.decimation < 0) throw ConfigError("config: decimation must be nonnegative");

  Eigen::MatrixXd Qh;
  try {
    Qh = matkit::sym_sqrt(cfg.Q);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: Q is not symmetric PSD: ") + e.what());
  }
  Eigen::LLT<Eigen::MatrixXd> rllt(cfg.R);
  if ((cfg.R - cfg.R.transpose()).norm() > 1e-10 * std::max(1.0, cfg.R.norm()) ||
      rllt.info() != Eigen::Success)
    throw ConfigError("config: R must be symmetric positive definite");

  if (auto bad = stabcheck::pbh_witness(cfg.A, cfg.B, cfg.rank_tol))
    throw ConfigError("config: (A, B) fails the stabilizability check at eigenvalue " +
                      detail::complex_str(*bad));
  if (auto bad = stabcheck::pbh_witness(cfg.A.transpose(), Qh, cfg.rank_tol))
    throw ConfigError("config: (A, Q^{1/2}) fails the detectability check at eigenvalue " +
                      detail::complex_str(*bad));

  if (!stabcheck::pbh_stabilizable(cfg.theta0_A, cfg.theta0_B) ||
      !stabcheck::pbh_detectable(cfg.theta0_A, Qh))
    throw ConfigError("config: initial estimate (theta0_A, theta0_B) must be "
                      "stabilizable and detectable");
}

/// Canonical JSON image of the effective configuration (keys sorted by
/// nlohmann's object ordering), used for hashing and provenance.
inline nlohmann::json effective_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["p"] = cfg.p;
  const auto flat = [](const Eigen::MatrixXd& M) {
    std::vector<double> v;
    v.reserve(M.size());
    for (int i = 0; i < M.rows(); ++i)
      for (int c = 0; c < M.cols(); ++c) v.push_back(M(i, c));
    return v;
  };
  j["A"] = flat(cfg.A);
  j["B"] = flat(cfg.B);
  j["D"] = flat(cfg.D);
  j["Q"] = flat(cfg.Q);
  j["R"] = flat(cfg.R);
  j["x0"] = flat(cfg.x0);
  j["T"] = cfg.T;
  j["h"] = cfg.h;
  j["seed_w"] = cfg.seed_w;
  j["seed_v"] = cfg.seed_v;
  j["seed_eta"] = cfg.seed_eta;
  j["gamma_reg"] = cfg.gamma_reg;
  j["excitation_exponent"] = cfg.excitation_exponent;
  j["theta0_A"] = flat(cfg.theta0_A);
  j["theta0_B"] = flat(cfg.theta0_B);
  j["rank_tol"] = cfg.rank_tol;
  j["care_tol"] = cfg.care_tol;
  j["decimation"] = cfg.decimation;
  j["blowup_cap"] = cfg.blowup_cap;
  return j;
}

/// FNV-1a 64-bit over the canonical JSON text, as a hex string.
inline std::string config_hash(const RunConfig& cfg) {
  const std::string text = effective_json(cfg).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << hash;
  return os.str();
}

}  // namespace alqg::cli
