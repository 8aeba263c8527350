#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "alqg/stabcheck.hpp"
#include "alqg/theta.hpp"

namespace alqg::wls {

/// Weight of the least-squares recursion at information level r. The raw
/// 1/log^2(r) is singular at r = 1 (the initial value), so r is clamped at e;
/// past r >= e the clamp is inactive and the weight is exact.
inline double weight(double r) {
  const double rc = std::max(r, std::numbers::e);
  const double lg = std::log(rc);
  return 1.0 / (lg * lg);
}

/// State of the continuous-time weighted least-squares estimator,
/// discretized as a rank-one-update recursion over simulation micro-steps.
struct EstimatorState {
  Eigen::MatrixXd theta;            // (n+m) x n, theta^T = [A, B]
  Eigen::MatrixXd P;                // (n+m) x (n+m), symmetric PD covariance
  double r = 1.0;                   // ||P^{-1}(0)|| + integral of |phi|^2
  Eigen::MatrixXd gram_unweighted;  // integral of phi phi^T (no weight)
  long step_count = 0;

  int dim_n = 0;
  int dim_m = 0;

  double a() const { return weight(r); }

  /// Advance by one micro-step of size h: phi is the regressor [x; u]
  /// sampled at the step start, dx the realized state increment. The
  /// covariance uses the exact rank-one inverse update, so P stays positive
  /// definite and matches the closed-form information integral.
  void update(const Eigen::VectorXd& phi, const Eigen::VectorXd& dx, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("wls::update: step size must be positive");
    if (!phi.allFinite() || !dx.allFinite())
      throw std::invalid_argument("wls::update: non-finite input (simulation blow-up?)");
    if (scratch_.size() != phi.size()) {
      scratch_.resize(phi.size());
      innov_.resize(dx.size());
    }

    r += phi.squaredNorm() * h;
    const double aw = weight(r);

    scratch_.noalias() = P * phi;
    const double denom = 1.0 + aw * h * phi.dot(scratch_);
    P.noalias() -= (aw * h / denom) * (scratch_ * scratch_.transpose());

    // Innovation against the pre-update estimate, gain through the updated P.
    innov_.noalias() = phi.transpose() * theta;
    innov_ = dx.transpose() - innov_ * h;
    scratch_.noalias() = P * phi;
    theta.noalias() += aw * scratch_ * innov_;

    gram_unweighted.noalias() += (phi * phi.transpose()) * h;

    if (++step_count % 10000 == 0) P = 0.5 * (P + P.transpose()).eval();
  }

 private:
  Eigen::VectorXd scratch_;
  Eigen::RowVectorXd innov_;
};

/// Fresh estimator with P = I, r = ||P^{-1}(0)|| = 1. The initial model must
/// be stabilizable and detectable (Qh = Q^{1/2}), since the first control
/// interval runs on it.
inline EstimatorState init(const Eigen::MatrixXd& theta0, int n, int m,
                           const Eigen::MatrixXd& Qh) {
  if (theta0.rows() != n + m || theta0.cols() != n)
    throw std::invalid_argument("wls::init: theta0 must be (n+m) x n");
  const Eigen::MatrixXd A0 = theta_A(theta0);
  const Eigen::MatrixXd B0 = theta_B(theta0);
  if (!stabcheck::pbh_stabilizable(A0, B0))
    throw std::invalid_argument("wls::init: initial (A, B) is not stabilizable");
  if (!stabcheck::pbh_detectable(A0, Qh))
    throw std::invalid_argument("wls::init: initial (A, Q^{1/2}) is not detectable");

  EstimatorState s;
  s.theta = theta0;
  s.P = Eigen::MatrixXd::Identity(n + m, n + m);
  s.r = 1.0;
  s.gram_unweighted = Eigen::MatrixXd::Zero(n + m, n + m);
  s.dim_n = n;
  s.dim_m = m;
  return s;
}

/// Pure-transition convenience wrapper around EstimatorState::update.
inline EstimatorState step(EstimatorState s, const Eigen::VectorXd& phi,
                           const Eigen::VectorXd& dx, double h) {
  s.update(phi, dx, h);
  return s;
}

}  // namespace alqg::wls
