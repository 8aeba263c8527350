#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "alqg/riccati.hpp"
#include "alqg/theta.hpp"

namespace alqg::control {

/// Per-interval feedback state: the estimated-model Riccati solution and
/// gain, the diminishing excitation amplitude, and the excitation anchor
/// value at the interval start.
struct ControllerState {
  Eigen::MatrixXd L;            // m x n feedback gain
  Eigen::MatrixXd X;            // n x n Riccati solution for the interval model
  Eigen::MatrixXd closed_loop;  // A(k) + B(k) L(k), diagnostic
  int k = 0;
  double gamma_k = 0.0;             // excitation amplitude, k^{-exponent}
  Eigen::VectorXd v_anchor;         // excitation process value at the interval start
  double excitation_exponent = 0.2;
  bool fell_back = false;           // this interval reuses the previous gain
  double gain_delta = 0.0;          // ||L - L_prev||_F across the refresh
};

inline double excitation_gain(int k, double exponent) {
  return k >= 1 ? std::pow(1.0 / static_cast<double>(k), exponent) : 0.0;
}

/// Refresh at integer time k from the regularized estimate: solve the
/// estimated-model Riccati equation and set L = -R^{-1} B(k)^T X(k). A
/// degenerate interval model (flagged by the caller or surfacing as a solve
/// failure) keeps the previous gain; the excitation schedule advances
/// regardless.
inline ControllerState refresh(const ControllerState& prev, const Eigen::MatrixXd& theta_hat,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int k,
                               const Eigen::VectorXd& v_now, bool model_usable = true,
                               double care_tol = 1e-9) {
  if (k < 0) throw std::invalid_argument("control::refresh: k must be nonnegative");
  ControllerState next = prev;
  next.k = k;
  next.gamma_k = excitation_gain(k, prev.excitation_exponent);
  next.v_anchor = v_now;
  next.fell_back = true;

  if (model_usable) {
    const Eigen::MatrixXd A = theta_A(theta_hat);
    const Eigen::MatrixXd B = theta_B(theta_hat);
    try {
      const riccati::CareSolution sol = riccati::solve_care({A, B, Q, R}, care_tol);
      next.X = sol.X;
      next.L = sol.L;
      next.closed_loop = A + B * sol.L;
      next.fell_back = false;
    } catch (const riccati::SolveError&) {
      // keep prev.L / prev.X
    }
  }
  if (next.L.size() == 0)
    throw std::runtime_error("control::refresh: no usable gain (first interval degenerate)");
  next.gain_delta = prev.L.size() == next.L.size() ? (next.L - prev.L).norm() : next.L.norm();
  return next;
}

/// Control value u = L x + gamma_k (v(t) - v(k)).
inline Eigen::VectorXd control(const ControllerState& s, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& v_now) {
  return s.L * x + s.gamma_k * (v_now - s.v_anchor);
}

}  // namespace alqg::control
