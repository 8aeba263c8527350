#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "alqg/matkit.hpp"
#include "alqg/rng.hpp"
#include "alqg/stabcheck.hpp"

namespace alqg::regularize {

/// Candidate perturbation drawn uniformly from the Frobenius unit ball of
/// (n+m) x n matrices: direction uniform on the sphere, radius u^(1/d).
inline Eigen::MatrixXd sample_unit_ball(GaussianStream& rng, int n, int m) {
  const int rows = n + m;
  const int d = rows * n;
  Eigen::MatrixXd eta(rows, n);
  double norm2 = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double g = rng.gaussian();
      eta(i, j) = g;
      norm2 += g * g;
    }
  }
  const double nrm = std::sqrt(norm2);
  if (nrm == 0.0) return Eigen::MatrixXd::Zero(rows, n);
  const double radius = std::pow(rng.uniform01(), 1.0 / d);
  return eta * (radius / nrm);
}

/// What happened at one unit-interval update; kept for logging and for the
/// acceptance-contract checks.
struct StepEvent {
  int k = 0;
  double log_f_eta = 0.0;    // objective at the fresh candidate
  double log_f_prev = 0.0;   // objective at the carried perturbation
  double log_f_new = 0.0;    // objective at the retained choice
  bool switched = false;
  bool degenerate = false;   // both candidates scored -inf this interval
};

/// Recursion keeping a perturbation beta in the unit ball such that the
/// regularized estimate theta - P^{1/2} beta stays uniformly stabilizable
/// and detectable; emits the piecewise-constant estimate for (k, k+1].
struct RegularizerState {
  Eigen::MatrixXd beta;       // (n+m) x n, ||beta||_F <= 1
  double log_f_current = 0.0;
  double gamma = 1.2;         // acceptance ratio, in (1, sqrt 2)
  GaussianStream rng{0};
  Eigen::MatrixXd theta_hat;  // regularized estimate for the current interval
  Eigen::MatrixXd theta_hat_prev;
  int last_k = 0;
  StepEvent last_event;
};

inline RegularizerState init(const Eigen::MatrixXd& theta0, const Eigen::MatrixXd& Qh,
                             double gamma, std::uint64_t seed) {
  if (!(gamma > 1.0 && gamma < std::sqrt(2.0)))
    throw std::invalid_argument("regularize::init: gamma must lie in (1, sqrt 2)");
  RegularizerState s;
  s.beta = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
  s.gamma = gamma;
  s.rng = GaussianStream(seed);
  s.theta_hat = theta0;  // beta(0) = 0, so theta_bar(0) is the raw estimate
  s.theta_hat_prev = theta0;
  s.last_k = 0;
  s.log_f_current = stabcheck::regularization_objective(theta0, Qh).log_value;
  return s;
}

/// One update at integer time k: draw a candidate, keep whichever
/// perturbation wins the ratio test, refresh theta_hat. If both candidates
/// score -inf the previous beta is retained and the interval is flagged
/// degenerate (the controller holds its gain over such intervals).
inline void step(RegularizerState& s, const Eigen::MatrixXd& theta_k,
                 const Eigen::MatrixXd& P_k, const Eigen::MatrixXd& Qh, int k) {
  if (k < 1) throw std::invalid_argument("regularize::step: k must be >= 1");

  const Eigen::MatrixXd P_half = matkit::sym_sqrt(P_k);
  const Eigen::MatrixXd eta =
      sample_unit_ball(s.rng, static_cast<int>(theta_k.cols()),
                       static_cast<int>(theta_k.rows() - theta_k.cols()));

  const double f_eta =
      stabcheck::regularization_objective(theta_k - P_half * eta, Qh).log_value;
  const double f_prev =
      stabcheck::regularization_objective(theta_k - P_half * s.beta, Qh).log_value;

  StepEvent ev;
  ev.k = k;
  ev.log_f_eta = f_eta;
  ev.log_f_prev = f_prev;

  const bool eta_finite = f_eta > stabcheck::kNegInf;
  const bool prev_finite = f_prev > stabcheck::kNegInf;
  if (eta_finite && (!prev_finite || f_eta >= std::log(s.gamma) + f_prev)) {
    s.beta = eta;
    ev.switched = true;
    ev.log_f_new = f_eta;
  } else {
    ev.log_f_new = f_prev;
    ev.degenerate = !eta_finite && !prev_finite;
  }

  s.theta_hat_prev = s.theta_hat;
  s.theta_hat = theta_k - P_half * s.beta;
  s.log_f_current = ev.log_f_new;
  s.last_k = k;
  s.last_event = ev;
}

/// Piecewise-constant estimate: theta_hat(t) is the update made at
/// k = ceil(t) - 1, constant on each interval (k, k+1]. Only the current and
/// previous intervals are retained.
inline const Eigen::MatrixXd& hold(const RegularizerState& s, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("regularize::hold: t must be positive");
  const int k = static_cast<int>(std::ceil(t)) - 1;
  if (k == s.last_k) return s.theta_hat;
  if (k == s.last_k - 1) return s.theta_hat_prev;
  throw std::invalid_argument("regularize::hold: t outside the retained window");
}

}  // namespace alqg::regularize
