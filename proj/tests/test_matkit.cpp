#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <complex>

#include "alqg/matkit.hpp"
#include "test_support.hpp"

using namespace alqg;
using Catch::Approx;

namespace {

std::complex<double> closest(const std::vector<std::complex<double>>& evs,
                             std::complex<double> target) {
  std::complex<double> best = evs.front();
  for (const auto& ev : evs)
    if (std::abs(ev - target) < std::abs(best - target)) best = ev;
  return best;
}

}  // namespace

TEST_CASE("spectrum of simple matrices", "[matkit]") {
  Eigen::MatrixXd M = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  auto s = matkit::spectrum(M);
  REQUIRE(s.source_dim == 2);
  REQUIRE(std::abs(closest(s.eigenvalues, {1, 0}) - std::complex<double>(1, 0)) < 1e-12);
  REQUIRE(std::abs(closest(s.eigenvalues, {-1, 0}) - std::complex<double>(-1, 0)) < 1e-12);

  Eigen::MatrixXd rot(2, 2);
  rot << 0, 1, -1, 0;
  auto sr = matkit::spectrum(rot);
  REQUIRE(std::abs(closest(sr.eigenvalues, {0, 1}) - std::complex<double>(0, 1)) < 1e-12);
  REQUIRE(std::abs(closest(sr.eigenvalues, {0, -1}) - std::complex<double>(0, -1)) < 1e-12);
}

TEST_CASE("spectrum eigenvalues satisfy an independent residual check", "[matkit]") {
  GaussianStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd M = testsup::random_matrix(rng, 5, 5);
    const auto s = matkit::spectrum(M);
    REQUIRE(s.eigenvalues.size() == 5);
    for (const auto& lam : s.eigenvalues) {
      // Independent oracle: the smallest singular direction of M - lam I.
      const Eigen::MatrixXcd shifted =
          M.cast<std::complex<double>>() -
          lam * Eigen::MatrixXcd::Identity(5, 5);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
      const Eigen::VectorXcd v = svd.matrixV().col(4);
      REQUIRE((shifted * v).norm() <= 1e-8 * M.norm());
    }
  }
}

TEST_CASE("spectrum enforces conjugate pairing", "[matkit]") {
  GaussianStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd M = testsup::random_matrix(rng, 6, 6);
    auto evs = matkit::spectrum(M).eigenvalues;
    // every complex value must find its exact conjugate in the list
    for (const auto& lam : evs) {
      if (lam.imag() == 0.0) continue;
      REQUIRE(std::count(evs.begin(), evs.end(), std::conj(lam)) >= 1);
    }
  }
}

TEST_CASE("spectrum rejects bad input", "[matkit]") {
  REQUIRE_THROWS_AS(matkit::spectrum(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(matkit::spectrum(bad), std::invalid_argument);
}

TEST_CASE("split_half_planes boundary handling", "[matkit]") {
  matkit::Spectrum s;
  s.source_dim = 2;
  s.eigenvalues = {{1, 0}, {-1, 0}};
  auto [plus, minus] = matkit::split_half_planes(s, 0.0);
  REQUIRE(plus.size() == 1);
  REQUIRE(minus.size() == 1);
  REQUIRE(plus[0].real() == 1.0);

  s.source_dim = 1;
  s.eigenvalues = {{0, 0}};
  auto [p2, m2] = matkit::split_half_planes(s, 0.0);
  REQUIRE(p2.size() == 1);  // the imaginary axis belongs to the plus side
  REQUIRE(m2.empty());

  s.eigenvalues = {{-1e-12, 0}};
  auto [p3, m3] = matkit::split_half_planes(s, 1e-9);
  REQUIRE(p3.size() == 1);  // inside the tolerance band
  REQUIRE(m3.empty());
}

TEST_CASE("split_half_planes always partitions", "[matkit]") {
  GaussianStream rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 6.999);
    const auto s = matkit::spectrum(testsup::random_matrix(rng, n, n));
    const auto [plus, minus] = matkit::split_half_planes(s);
    REQUIRE(static_cast<int>(plus.size() + minus.size()) == s.source_dim);
  }
}

TEST_CASE("sym_sqrt on diagonal and identity", "[matkit]") {
  REQUIRE(matkit::sym_sqrt(Eigen::MatrixXd::Identity(3, 3))
              .isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
  Eigen::MatrixXd M = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  Eigen::MatrixXd expected = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  REQUIRE(matkit::sym_sqrt(M).isApprox(expected, 1e-14));
}

TEST_CASE("sym_sqrt reconstructs random PSD matrices", "[matkit]") {
  GaussianStream rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 7.999);
    const Eigen::MatrixXd M = testsup::random_psd(rng, n);
    const Eigen::MatrixXd S = matkit::sym_sqrt(M);
    REQUIRE((S - S.transpose()).norm() <= 1e-12 * (1.0 + S.norm()));
    REQUIRE((S * S - M).norm() <= 1e-8 * (1.0 + M.norm()));
  }
}

TEST_CASE("sym_sqrt rejects asymmetric and indefinite input", "[matkit]") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  REQUIRE_THROWS_AS(matkit::sym_sqrt(asym), std::invalid_argument);
  Eigen::MatrixXd indef = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  REQUIRE_THROWS_AS(matkit::sym_sqrt(indef), std::invalid_argument);
  // tiny negative eigenvalues clamp to zero instead of failing
  Eigen::MatrixXd nearly = Eigen::Vector2d(1.0, -1e-14).asDiagonal();
  REQUIRE_NOTHROW(matkit::sym_sqrt(nearly));
}

TEST_CASE("orthonormal_range basics", "[matkit]") {
  REQUIRE(matkit::orthonormal_range(Eigen::MatrixXd::Zero(3, 2)).cols() == 0);

  Eigen::MatrixXd rank1(2, 2);
  rank1 << 1, 2, 0, 0;
  const Eigen::MatrixXd V = matkit::orthonormal_range(rank1);
  REQUIRE(V.cols() == 1);
  REQUIRE(std::abs(V(0, 0)) == Approx(1.0).margin(1e-12));
  REQUIRE(std::abs(V(1, 0)) == Approx(0.0).margin(1e-12));
}

TEST_CASE("orthonormal_range spans the column space", "[matkit]") {
  GaussianStream rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 5.999);
    const int k = 1 + static_cast<int>(rng.uniform01() * 4.999);
    const Eigen::MatrixXd M = testsup::random_matrix(rng, n, k);
    const Eigen::MatrixXd V = matkit::orthonormal_range(M, 1e-8);
    REQUIRE((V.transpose() * V -
             Eigen::MatrixXd::Identity(V.cols(), V.cols()))
                .norm() <= 1e-10);
    REQUIRE((M - V * V.transpose() * M).norm() <= 1e-8 * M.norm() * 10);
  }
}

TEST_CASE("orthonormal_complement completes the basis", "[matkit]") {
  GaussianStream rng(16);
  const Eigen::MatrixXd M = testsup::random_matrix(rng, 5, 2);
  const Eigen::MatrixXd V = matkit::orthonormal_range(M);
  const Eigen::MatrixXd W = matkit::orthonormal_complement(V, 5);
  REQUIRE(W.cols() == 5 - V.cols());
  Eigen::MatrixXd full(5, 5);
  full << V, W;
  REQUIRE((full.transpose() * full - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-10);
}

TEST_CASE("is_hurwitz", "[matkit]") {
  REQUIRE(matkit::is_hurwitz(-Eigen::MatrixXd::Identity(3, 3)));
  Eigen::MatrixXd nilpotent(2, 2);
  nilpotent << 0, 1, 0, 0;
  REQUIRE_FALSE(matkit::is_hurwitz(nilpotent));
  REQUIRE_FALSE(matkit::is_hurwitz(-Eigen::MatrixXd::Identity(2, 2), 1.5));
}
