#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "alqg/artifacts.hpp"
#include "alqg/config.hpp"
#include "alqg/riccati.hpp"
#include "alqg/simloop.hpp"

using namespace alqg;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_temp_config(const std::string& name, const nlohmann::json& j) {
  const fs::path dir = fs::temp_directory_path() / "alqg_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

nlohmann::json scalar_json() {
  return nlohmann::json{{"n", 1},       {"m", 1},          {"p", 1},
                        {"A", {0.5}},   {"B", {1.0}},      {"D", {0.5}},
                        {"Q", {1.0}},   {"R", {1.0}},      {"x0", {0.0}},
                        {"T", 5.0},     {"h", 0.001},      {"seed_w", 7},
                        {"seed_v", 8},  {"seed_eta", 9},   {"decimation", 50}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ALQG_CLI_BIN) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing applies defaults and reads matrices", "[cliio]") {
  const auto cfg = cli::parse_config(scalar_json());
  REQUIRE(cfg.n == 1);
  REQUIRE(cfg.A(0, 0) == 0.5);
  REQUIRE(cfg.gamma_reg == 1.2);
  REQUIRE(cfg.excitation_exponent == 0.2);
  REQUIRE(cfg.theta0_A(0, 0) == -1.0);  // default -I
  REQUIRE(cfg.theta0_B(0, 0) == 1.0);   // default identity columns
  REQUIRE_NOTHROW(cli::validate_config(cfg));
}

TEST_CASE("config rejects malformed input", "[cliio]") {
  auto j = scalar_json();
  j.erase("A");
  REQUIRE_THROWS_AS(cli::parse_config(j), cli::ConfigError);

  j = scalar_json();
  j["A"] = {0.5, 0.1};  // wrong length
  REQUIRE_THROWS_AS(cli::parse_config(j), cli::ConfigError);

  j = scalar_json();
  j["gamma_reg"] = 1.5;
  REQUIRE_THROWS_AS(cli::validate_config(cli::parse_config(j)), cli::ConfigError);

  j = scalar_json();
  j["h"] = 0.5;
  REQUIRE_THROWS_AS(cli::validate_config(cli::parse_config(j)), cli::ConfigError);

  j = scalar_json();
  j["T"] = 0.25;
  REQUIRE_THROWS_AS(cli::validate_config(cli::parse_config(j)), cli::ConfigError);
}

TEST_CASE("validation names the failing eigenvalue", "[cliio]") {
  auto j = scalar_json();
  j["A"] = {1.0};
  j["B"] = {0.0};
  try {
    cli::validate_config(cli::parse_config(j));
    FAIL("expected a ConfigError");
  } catch (const cli::ConfigError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("stabilizability") != std::string::npos);
    REQUIRE(msg.find("1") != std::string::npos);
  }
}

TEST_CASE("config hash is stable and input-sensitive", "[cliio]") {
  const auto cfg = cli::parse_config(scalar_json());
  auto cfg2 = cfg;
  REQUIRE(cli::config_hash(cfg) == cli::config_hash(cfg2));
  cfg2.seed_w = 1234;
  REQUIRE(cli::config_hash(cfg) != cli::config_hash(cfg2));
}

TEST_CASE("summary json carries the stable schema", "[cliio]") {
  const auto cfg = cli::parse_config(scalar_json());
  const auto rec = sim::simulate(cfg.model(), cfg.options());
  const auto j = cli::summary_json(rec, cli::config_hash(cfg));
  for (const char* key :
       {"J_hat", "J_star", "theta_err_full", "theta_err_masked", "stability_stat",
        "beta_switches", "fallback_intervals", "seeds", "config_hash"}) {
    INFO(key);
    REQUIRE(j.contains(key));
  }
}

TEST_CASE("trajectory csv has the documented header and column count", "[cliio]") {
  const auto cfg = cli::parse_config(scalar_json());
  const auto rec = sim::simulate(cfg.model(), cfg.options());
  const fs::path dir = fs::temp_directory_path() / "alqg_tests";
  fs::create_directories(dir);
  const fs::path csv = dir / "traj_check.csv";
  cli::write_trajectory_csv(rec, cfg.n, cfg.m, csv.string());

  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  REQUIRE(header ==
          "t,x_0,u_0,cost_integrand,running_avg_cost,theta_err_full,theta_err_masked,r,log_f");
  std::string row;
  std::getline(in, row);
  const long commas = std::count(row.begin(), row.end(), ',');
  REQUIRE(commas + 1 == 1 + cfg.n + cfg.m + 6);
}

TEST_CASE("cli run is deterministic at the artifact level", "[cliio]") {
  const fs::path cfg_path = write_temp_config("determinism.json", scalar_json());
  const fs::path out1 = fs::temp_directory_path() / "alqg_tests" / "det1";
  const fs::path out2 = fs::temp_directory_path() / "alqg_tests" / "det2";
  REQUIRE(run_cli("run --config " + cfg_path.string() + " --out " + out1.string() +
                  " > /dev/null") == 0);
  REQUIRE(run_cli("run --config " + cfg_path.string() + " --out " + out2.string() +
                  " > /dev/null") == 0);
  REQUIRE(read_file(out1 / "trajectory.csv") == read_file(out2 / "trajectory.csv"));
  REQUIRE(read_file(out1 / "events.csv") == read_file(out2 / "events.csv"));
  REQUIRE_FALSE(read_file(out1 / "trajectory.csv").empty());
  REQUIRE_FALSE(read_file(out1 / "plot.gp").empty());
}

TEST_CASE("cli exit codes: config error and numerical abort", "[cliio]") {
  // rejected model: stabilizability failure
  auto bad = scalar_json();
  bad["A"] = {1.0};
  bad["B"] = {0.0};
  const fs::path bad_path = write_temp_config("bad.json", bad);
  REQUIRE(run_cli("run --config " + bad_path.string() + " 2> /dev/null") == 1);

  // unreadable config
  REQUIRE(run_cli("run --config /nonexistent/cfg.json 2> /dev/null") == 1);

  // forced blow-up: cap below the noise floor
  auto blow = scalar_json();
  blow["blowup_cap"] = 1e-6;
  const fs::path blow_path = write_temp_config("blow.json", blow);
  const fs::path out = fs::temp_directory_path() / "alqg_tests" / "blow_out";
  REQUIRE(run_cli("run --config " + blow_path.string() + " --out " + out.string() +
                  " 2> /dev/null") == 2);
  REQUIRE_FALSE(read_file(out / "summary.json").empty());  // partial artifacts exist
  const auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  REQUIRE(summary.at("aborted").get<bool>());
}

TEST_CASE("cli oracle prints the optimal cost", "[cliio]") {
  const fs::path cfg_path = write_temp_config("oracle.json", scalar_json());
  const fs::path out = fs::temp_directory_path() / "alqg_tests" / "oracle.json.out";
  REQUIRE(run_cli("oracle --config " + cfg_path.string() + " > " + out.string()) == 0);
  const auto j = nlohmann::json::parse(read_file(out));
  REQUIRE(j.at("J_star").get<double>() == Approx(0.4045084971874737).margin(1e-12));
  REQUIRE(j.at("closed_loop_eigenvalues").size() == 1);

  // D = 0 zeroes the cost regardless of the plant
  auto dz = scalar_json();
  dz["D"] = {0.0};
  const fs::path dz_path = write_temp_config("oracle_d0.json", dz);
  REQUIRE(run_cli("oracle --config " + dz_path.string() + " > " + out.string()) == 0);
  REQUIRE(nlohmann::json::parse(read_file(out)).at("J_star").get<double>() == 0.0);

  // block system: the cost seen by the full solve equals the reachable-block
  // contraction tr(D1' X1 D1), which the chain solver cross-checks
  nlohmann::json blk = {
      {"n", 2},
      {"m", 1},
      {"p", 1},
      {"A", {0.5, 0.3, 0.0, -1.0}},
      {"B", {1.0, 0.0}},
      {"D", {1.0, 0.0}},
      {"Q", {1.0, 0.0, 0.0, 1.0}},
      {"R", {1.0}},
  };
  const fs::path blk_path = write_temp_config("oracle_block.json", blk);
  REQUIRE(run_cli("oracle --config " + blk_path.string() + " > " + out.string()) == 0);
  const auto jb = nlohmann::json::parse(read_file(out));
  const auto chain = riccati::solve_block_care(
      cli::load_config(blk_path.string()).A, cli::load_config(blk_path.string()).B,
      Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1), 1);
  REQUIRE(jb.at("J_star").get<double>() == Approx(chain.X1(0, 0)).margin(1e-7));
}

TEST_CASE("cli audit agrees and honors the empty edge", "[cliio]") {
  const fs::path out = fs::temp_directory_path() / "alqg_tests" / "audit.json.out";
  REQUIRE(run_cli("audit --samples 200 --seed 5 > " + out.string()) == 0);
  const auto j = nlohmann::json::parse(read_file(out));
  REQUIRE(j.at("samples").get<long>() == 220);
  REQUIRE(j.at("certificate_only").get<long>() == 0);
  REQUIRE(j.at("pbh_only").get<long>() == 0);
  REQUIRE(j.at("both_negative").get<long>() >= 20);

  REQUIRE(run_cli("audit --samples 0 --seed 5 > " + out.string()) == 0);
  const auto j0 = nlohmann::json::parse(read_file(out));
  REQUIRE(j0.at("samples").get<long>() == 0);
}

TEST_CASE("ALQG_OUT environment override", "[cliio]") {
  const fs::path cfg_path = write_temp_config("envout.json", scalar_json());
  const fs::path out = fs::temp_directory_path() / "alqg_tests" / "env_out";
  fs::remove_all(out);
  const std::string cmd = "ALQG_OUT=" + out.string() + " " + std::string(ALQG_CLI_BIN) +
                          " run --config " + cfg_path.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  REQUIRE(WEXITSTATUS(status) == 0);
  REQUIRE(fs::exists(out / "summary.json"));
}
