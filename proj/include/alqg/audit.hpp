#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "alqg/rng.hpp"
#include "alqg/stabcheck.hpp"

namespace alqg::cli {

/// Agreement counts between the determinant-product certificate (finite /
/// -inf) and the PBH rank oracle over a pair population.
struct AuditReport {
  long both_positive = 0;   // certificate finite, PBH full rank
  long both_negative = 0;   // certificate -inf, PBH deficient
  long cert_only = 0;       // certificate finite, PBH deficient
  long pbh_only = 0;        // certificate -inf, PBH full rank
  std::vector<std::string> disagreements;

  long total() const { return both_positive + both_negative + cert_only + pbh_only; }
  long disagreement_count() const { return cert_only + pbh_only; }
};

namespace audit_detail {

inline Eigen::MatrixXd random_orthogonal(GaussianStream& rng, int n) {
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ();
}

// A pair that is exactly non-stabilizable: one eigenvalue with Re >= 0 whose
// eigendirection (orthogonal, so perfectly conditioned) gets a zero row in B.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> degenerate_pair(GaussianStream& rng) {
  const int n = 2 + static_cast<int>(rng.uniform01() * 3.999);
  const int m = 1 + static_cast<int>(rng.uniform01() * 2.999);
  Eigen::VectorXd lam(n);
  lam[0] = 0.25 + rng.uniform01() * 2.0;  // the unreachable unstable mode
  for (int i = 1; i < n; ++i) lam[i] = -2.0 + rng.uniform01() * 3.0;
  const Eigen::MatrixXd U = random_orthogonal(rng, n);
  Eigen::MatrixXd Brows(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) Brows(i, j) = rng.gaussian();
  Brows.row(0).setZero();
  return {U * lam.asDiagonal() * U.transpose(), U * Brows};
}

}  // namespace audit_detail

inline void audit_pair(AuditReport& report, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const std::string& label) {
  const bool cert = stabcheck::stabilizability_certificate(A, B).positive();
  const bool pbh = stabcheck::pbh_stabilizable(A, B);
  if (cert && pbh) {
    ++report.both_positive;
  } else if (!cert && !pbh) {
    ++report.both_negative;
  } else {
    (cert ? ++report.cert_only : ++report.pbh_only);
    report.disagreements.push_back(label + (cert ? ": certificate positive, PBH deficient"
                                                 : ": certificate zero, PBH full rank"));
  }
}

/// Generate `samples` random pairs (n <= 5, m <= 3, Gaussian entries) plus 20
/// constructed degenerate pairs and tally certificate/PBH agreement. With
/// samples == 0 the report is empty.
inline AuditReport run_audit(long samples, std::uint64_t seed) {
  AuditReport report;
  if (samples <= 0) return report;

  GaussianStream rng(seed);
  for (long s = 0; s < samples; ++s) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 4.999);
    const int m = 1 + static_cast<int>(rng.uniform01() * 2.999);
    Eigen::MatrixXd A(n, n), B(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) B(i, j) = rng.gaussian();
    audit_pair(report, A, B, "random #" + std::to_string(s));
  }

  // Hand pair with an unreachable unstable mode, then randomized constructions.
  Eigen::MatrixXd A0(2, 2), B0(2, 1);
  A0 << 1, 0, 0, -1;
  B0 << 0, 1;
  audit_pair(report, A0, B0, "constructed #0");
  for (int s = 1; s < 20; ++s) {
    const auto [A, B] = audit_detail::degenerate_pair(rng);
    audit_pair(report, A, B, "constructed #" + std::to_string(s));
  }
  return report;
}

}  // namespace alqg::cli
