#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include "alqg/matkit.hpp"
#include "alqg/theta.hpp"

namespace alqg::stabcheck {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A Gram factor whose log-determinant (rows normalized to unit length) falls
// below this is treated as exactly zero; the product certificate becomes -inf.
inline constexpr double kZeroLogThreshold = -60.0;

/// Log-domain value of a determinant-product certificate. log_value is -inf
/// exactly when some factor underflowed the zero threshold.
struct CertificateValue {
  double log_value = 0.0;
  int factor_count = 0;

  bool positive() const { return log_value > kNegInf; }
};

/// Real 2n x (2n+2m) matrix [[s1*I - A, s2*I, B, 0], [-s2*I, s1*I - A, 0, B]]
/// for s = s1 + s2*i. Its row rank certifies that the mode s is reachable
/// through B.
inline Eigen::MatrixXd mode_pencil(std::complex<double> s, const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2 * n, 2 * n + 2 * m);
  Z.block(0, 0, n, n) = s.real() * I - A;
  Z.block(0, n, n, n) = s.imag() * I;
  Z.block(n, 0, n, n) = -s.imag() * I;
  Z.block(n, n, n, n) = s.real() * I - A;
  Z.block(0, 2 * n, n, m) = B;
  Z.block(n, 2 * n + m, n, m) = B;
  return Z;
}

namespace detail {

// log det(Z Z^T) of one mode pencil, or -inf when the Gram determinant is
// numerically zero. The zero test runs on the row-normalized pencil so it is
// scale free; the returned value is the raw (unnormalized) log determinant.
inline double pencil_log_factor(std::complex<double> s, const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B) {
  Eigen::MatrixXd Z = mode_pencil(s, A, B);
  const int rows = static_cast<int>(Z.rows());

  double log_row_scale = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double nrm = Z.row(i).norm();
    if (nrm <= 1e-300) return kNegInf;  // a vanished row: determinant is zero
    Z.row(i) /= nrm;
    log_row_scale += std::log(nrm);
  }

  const Eigen::MatrixXd G = Z * Z.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  double log_det = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double lam = es.eigenvalues()[i];
    if (lam <= 0.0) return kNegInf;
    log_det += std::log(lam);
  }
  if (log_det < kZeroLogThreshold) return kNegInf;
  return log_det + 2.0 * log_row_scale;
}

}  // namespace detail

/// Determinant-product stabilizability certificate: the product over the
/// closed-right-half-plane spectrum of det(Z(s) Z(s)^T) and over the open
/// left half of det(Z(-s) Z(-s)^T), accumulated in log domain. Finite iff
/// (A, B) is stabilizable.
inline CertificateValue stabilizability_certificate(const Eigen::MatrixXd& A,
                                                    const Eigen::MatrixXd& B,
                                                    double boundary_tol = 1e-9) {
  const matkit::Spectrum spec = matkit::spectrum(A);
  const auto [plus, minus] = matkit::split_half_planes(spec, boundary_tol);

  CertificateValue cert;
  for (const auto& s : plus) {
    cert.log_value += detail::pencil_log_factor(s, A, B);
    ++cert.factor_count;
    if (!cert.positive()) break;
  }
  if (cert.positive()) {
    for (const auto& s : minus) {
      cert.log_value += detail::pencil_log_factor(-s, A, B);
      ++cert.factor_count;
      if (!cert.positive()) break;
    }
  }
  if (!cert.positive()) {
    cert.log_value = kNegInf;
    cert.factor_count = spec.source_dim;
  }
  return cert;
}

/// Dual certificate: (A, C) detectable iff (A^T, C^T) stabilizable. Qh is the
/// symmetric PSD square root of the state weight, playing C^T.
inline CertificateValue detectability_certificate(const Eigen::MatrixXd& A,
                                                  const Eigen::MatrixXd& Qh,
                                                  double boundary_tol = 1e-9) {
  return stabilizability_certificate(A.transpose(), Qh, boundary_tol);
}

/// Combined objective the regularizer drives: log of the stabilizability
/// certificate of the candidate (A, B) plus the detectability certificate of
/// (A, Qh). -inf when either side vanishes.
inline CertificateValue regularization_objective(const Eigen::MatrixXd& theta_candidate,
                                                 const Eigen::MatrixXd& Qh) {
  const Eigen::MatrixXd A = theta_A(theta_candidate);
  const Eigen::MatrixXd B = theta_B(theta_candidate);
  if (Qh.rows() != A.rows())
    throw std::invalid_argument("regularization_objective: Qh dimension mismatch");

  const CertificateValue stab = stabilizability_certificate(A, B);
  CertificateValue out;
  out.factor_count = stab.factor_count;
  if (!stab.positive()) {
    out.log_value = kNegInf;
    out.factor_count += static_cast<int>(A.rows());
    return out;
  }
  const CertificateValue det = detectability_certificate(A, Qh);
  out.factor_count += det.factor_count;
  out.log_value = det.positive() ? stab.log_value + det.log_value : kNegInf;
  return out;
}

/// First closed-right-half-plane eigenvalue at which [sI - A, B] loses row
/// rank (singular values against a relative tolerance), or nullopt if none.
inline std::optional<std::complex<double>> pbh_witness(const Eigen::MatrixXd& A,
                                                       const Eigen::MatrixXd& B,
                                                       double tol = 1e-8) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  const matkit::Spectrum spec = matkit::spectrum(A);
  const auto [plus, minus] = matkit::split_half_planes(spec);
  (void)minus;

  Eigen::MatrixXcd P(n, n + m);
  for (const auto& lam : plus) {
    P.leftCols(n) =
        lam * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
    P.rightCols(m) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(P);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv[0] <= 0.0 || sv[n - 1] <= tol * sv[0]) return lam;
  }
  return std::nullopt;
}

/// Classical PBH rank test: true iff every eigenvalue with Re >= 0 keeps
/// [sI - A, B] at full row rank. Used as the oracle the certificate is
/// audited against.
inline bool pbh_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             double tol = 1e-8) {
  return !pbh_witness(A, B, tol).has_value();
}

inline bool pbh_detectable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Qh,
                           double tol = 1e-8) {
  return pbh_stabilizable(A.transpose(), Qh, tol);
}

}  // namespace alqg::stabcheck
