#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "alqg/controller.hpp"
#include "alqg/matkit.hpp"
#include "alqg/regularize.hpp"
#include "alqg/riccati.hpp"
#include "alqg/rng.hpp"
#include "alqg/subspace.hpp"
#include "alqg/theta.hpp"
#include "alqg/wls.hpp"

namespace alqg::sim {

/// Ground-truth plant and cost weights. Known only to the simulator and the
/// test oracles; the estimator and controller see x and u alone.
struct SystemModel {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd D;  // n x p noise gain
  Eigen::MatrixXd Q;  // n x n, symmetric PSD
  Eigen::MatrixXd R;  // m x m, symmetric PD
  Eigen::VectorXd x0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(D.cols()); }
};

struct RunOptions {
  double T = 100.0;   // horizon, >= 1
  double h = 1e-3;    // micro-step, in (0, 0.1]
  std::uint64_t seed_w = 1;
  std::uint64_t seed_v = 2;
  std::uint64_t seed_eta = 3;
  double gamma_reg = 1.2;
  double excitation_exponent = 0.2;
  Eigen::MatrixXd theta0;  // empty: defaults to A(0) = -I, B(0) = leading identity columns
  double rank_tol = 1e-8;
  double care_tol = 1e-9;
  long decimation = 0;  // steps between logged rows; 0 = ceil(1/(100 h))
  double blowup_cap = 1e8;
};

struct IntervalRecord {
  int k = 0;
  double log_f_eta = 0.0;
  double log_f_prev = 0.0;
  double log_f = 0.0;
  bool switched = false;
  bool degenerate = false;
  bool fell_back = false;
  double gain_delta = 0.0;
  double closed_loop_margin = std::numeric_limits<double>::quiet_NaN();
};

struct Checkpoint {
  double t = 0.0;
  double avg_x2 = 0.0;          // (1/t) integral of |x|^2
  double avg_cost = 0.0;        // (1/t) integral of the cost integrand
  double avg_excitation = 0.0;  // (1/t) integral of gamma^2 |v - v(k)|^2
  double theta_err_masked = 0.0;
  long beta_switches = 0;
};

/// One simulation's logged output: decimated time series, per-interval
/// adaptation events, dyadic checkpoints, and summary statistics.
struct RunRecord {
  // Decimated series (parallel vectors, one entry per logged row).
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u;
  std::vector<double> cost_integrand;
  std::vector<double> running_avg_cost;  // trapezoid over the logged rows themselves
  std::vector<double> theta_err_full;
  std::vector<double> theta_err_masked;
  std::vector<double> r;
  std::vector<double> a;
  std::vector<double> log_f;
  std::vector<int> beta_switched;
  std::vector<double> lambda_min_strong;  // excitation floor of the reachable block
  std::vector<double> excitation_imbalance;       // weak/strong excitation ratio diagnostic
  std::vector<Eigen::VectorXd> w;         // integrated noise path (stream-isolation probe)

  // Per unit interval.
  std::vector<IntervalRecord> intervals;
  std::vector<Eigen::MatrixXd> theta_hat_by_k;  // entry k = estimate held on (k, k+1]
  std::vector<Eigen::MatrixXd> gram_by_k;       // unweighted information at integer k

  std::vector<Checkpoint> checkpoints;  // dyadic times plus the final time

  // Summary.
  double T_final = 0.0;
  double J_hat = 0.0;   // full-resolution time-average cost
  double J_star = 0.0;  // tr(D^T X* D) for the true model
  double theta_err_full_final = std::numeric_limits<double>::quiet_NaN();
  double theta_err_masked_final = std::numeric_limits<double>::quiet_NaN();
  double max_x_norm = 0.0;
  double avg_x2 = 0.0;
  long beta_switches = 0;
  long fallback_intervals = 0;
  long degenerate_intervals = 0;
  std::uint64_t seed_w = 0, seed_v = 0, seed_eta = 0;
  bool oracle_mode = false;
  bool aborted = false;
  std::string abort_reason;
};

inline Eigen::MatrixXd default_theta0(int n, int m) {
  return pack_theta(-Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, m));
}

/// Global-stability statistic: the worst time-average of |x|^2 over the
/// dyadic checkpoints (and the final time). +inf for aborted runs.
inline double stability_statistic(const RunRecord& rec) {
  if (rec.aborted) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& cp : rec.checkpoints) worst = std::max(worst, cp.avg_x2);
  return worst;
}

namespace detail {

enum class Mode { adaptive, oracle };

inline void validate(const SystemModel& model, const RunOptions& opt) {
  const int n = model.n(), m = model.m(), p = model.p();
  if (n < 1 || m < 1 || p < 1) throw std::invalid_argument("simulate: empty dimensions");
  if (model.A.cols() != n || model.B.rows() != n || model.D.rows() != n ||
      model.Q.rows() != n || model.Q.cols() != n || model.R.rows() != m ||
      model.R.cols() != m || model.x0.size() != n)
    throw std::invalid_argument("simulate: inconsistent model dimensions");
  if (!(opt.T >= 1.0)) throw std::invalid_argument("simulate: T must be >= 1");
  if (!(opt.h > 0.0 && opt.h <= 0.1))
    throw std::invalid_argument("simulate: h must lie in (0, 0.1]");
}

inline RunRecord run(const SystemModel& model, const RunOptions& opt, Mode mode) {
  validate(model, opt);
  const int n = model.n(), m = model.m(), p = model.p();
  const double h = opt.h;
  const double sqrt_h = std::sqrt(h);

  const Eigen::MatrixXd Qh = matkit::sym_sqrt(model.Q);
  const Eigen::MatrixXd theta_true = pack_theta(model.A, model.B);
  const subspace::Decomposition dec =
      subspace::build_decomposition(model.A, model.B, model.D, opt.rank_tol);
  const Eigen::MatrixXd masked_true = subspace::masked_estimate(theta_true, dec);

  // Selectors for the strongly/weakly excited blocks of the information Gram.
  Eigen::MatrixXd basis_change = Eigen::MatrixXd::Zero(n + m, n + m);
  basis_change.topLeftCorner(n, n) = dec.U.transpose();
  basis_change.bottomRightCorner(m, m).setIdentity();
  Eigen::MatrixXd strong_sel(dec.n1 + m, n + m);
  strong_sel << basis_change.topRows(dec.n1), basis_change.bottomRows(m);
  const Eigen::MatrixXd weak_sel = basis_change.middleRows(dec.n1, n - dec.n1);

  const riccati::CareSolution oracle_sol =
      riccati::solve_care({model.A, model.B, model.Q, model.R}, opt.care_tol);

  RunRecord rec;
  rec.seed_w = opt.seed_w;
  rec.seed_v = opt.seed_v;
  rec.seed_eta = opt.seed_eta;
  rec.oracle_mode = (mode == Mode::oracle);
  rec.J_star = (model.D.transpose() * oracle_sol.X * model.D).trace();

  GaussianStream wstream(opt.seed_w);
  GaussianStream vstream(opt.seed_v);

  const bool adaptive = (mode == Mode::adaptive);
  wls::EstimatorState est;
  regularize::RegularizerState reg;
  control::ControllerState ctrl;
  ctrl.excitation_exponent = opt.excitation_exponent;
  if (adaptive) {
    const Eigen::MatrixXd theta0 = opt.theta0.size() ? opt.theta0 : default_theta0(n, m);
    est = wls::init(theta0, n, m, Qh);
    reg = regularize::init(est.theta, Qh, opt.gamma_reg, opt.seed_eta);
    ctrl = control::refresh(ctrl, reg.theta_hat, model.Q, model.R, 0,
                            Eigen::VectorXd::Zero(m), true, opt.care_tol);
    rec.theta_hat_by_k.push_back(reg.theta_hat);
    rec.gram_by_k.push_back(Eigen::MatrixXd::Zero(n + m, n + m));
  } else {
    ctrl.L = oracle_sol.L;
    ctrl.X = oracle_sol.X;
    ctrl.closed_loop = model.A + model.B * oracle_sol.L;
    ctrl.v_anchor = Eigen::VectorXd::Zero(m);
  }

  const long nsteps = std::max<long>(1, std::llround(opt.T / h));
  rec.T_final = static_cast<double>(nsteps) * h;
  const long stride =
      opt.decimation > 0 ? opt.decimation : static_cast<long>(std::ceil(1.0 / (100.0 * h)));
  const int k_max = static_cast<int>(std::floor(rec.T_final + 1e-9));

  Eigen::VectorXd x = model.x0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w_acc = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u(m), phi(n + m), dx(n), dw(p), dv(m);

  double int_cost = 0.0, int_x2 = 0.0, int_exc = 0.0;  // full-resolution trapezoids
  double prev_cost = 0.0, prev_x2 = 0.0, prev_exc = 0.0;
  double dec_int_cost = 0.0;  // trapezoid over the logged rows only
  double last_log_t = 0.0, last_log_cost = 0.0;
  double next_dyadic = 1.0;
  int next_k = 1;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto log_row = [&](double t_now, double c_now) {
    if (!rec.t.empty() && rec.t.back() == t_now) return;
    if (t_now > 0.0) {
      dec_int_cost += 0.5 * (last_log_cost + c_now) * (t_now - last_log_t);
    }
    last_log_t = t_now;
    last_log_cost = c_now;
    rec.t.push_back(t_now);
    rec.x.push_back(x);
    rec.u.push_back(u);
    rec.cost_integrand.push_back(c_now);
    rec.running_avg_cost.push_back(t_now > 0.0 ? dec_int_cost / t_now : 0.0);
    if (adaptive) {
      rec.theta_err_full.push_back((reg.theta_hat - theta_true).norm());
      rec.theta_err_masked.push_back(
          (subspace::masked_estimate(reg.theta_hat, dec) - masked_true).norm());
      rec.r.push_back(est.r);
      rec.a.push_back(est.a());
      rec.log_f.push_back(reg.log_f_current);
      rec.beta_switched.push_back(reg.last_event.switched ? 1 : 0);
      const Eigen::MatrixXd strong = strong_sel * est.gram_unweighted * strong_sel.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(strong, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      rec.lambda_min_strong.push_back(lmin);
      if (weak_sel.rows() > 0) {
        const Eigen::MatrixXd weak =
            Eigen::MatrixXd::Identity(weak_sel.rows(), weak_sel.rows()) +
            weak_sel * est.gram_unweighted * weak_sel.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(weak, Eigen::EigenvaluesOnly);
        const double denom = est.a() * lmin;
        rec.excitation_imbalance.push_back(
            denom > 0.0 ? ew.eigenvalues().maxCoeff() / denom
                        : std::numeric_limits<double>::infinity());
      } else {
        rec.excitation_imbalance.push_back(0.0);
      }
    } else {
      rec.theta_err_full.push_back(nan);
      rec.theta_err_masked.push_back(nan);
      rec.r.push_back(nan);
      rec.a.push_back(nan);
      rec.log_f.push_back(nan);
      rec.beta_switched.push_back(0);
      rec.lambda_min_strong.push_back(nan);
      rec.excitation_imbalance.push_back(nan);
    }
    rec.w.push_back(w_acc);
  };

  auto push_checkpoint = [&](double t_now) {
    Checkpoint cp;
    cp.t = t_now;
    cp.avg_x2 = int_x2 / t_now;
    cp.avg_cost = int_cost / t_now;
    cp.avg_excitation = int_exc / t_now;
    cp.theta_err_masked =
        adaptive ? (subspace::masked_estimate(reg.theta_hat, dec) - masked_true).norm() : nan;
    cp.beta_switches = rec.beta_switches;
    rec.checkpoints.push_back(cp);
  };

  for (long i = 0; i <= nsteps; ++i) {
    const double t = static_cast<double>(i) * h;
    u = ctrl.L * x;
    if (adaptive && ctrl.gamma_k != 0.0) u.noalias() += ctrl.gamma_k * (v - ctrl.v_anchor);
    const double cost_now = x.dot(model.Q * x) + u.dot(model.R * u);
    const double x2_now = x.squaredNorm();
    const double exc_now =
        adaptive ? ctrl.gamma_k * ctrl.gamma_k * (v - ctrl.v_anchor).squaredNorm() : 0.0;
    if (i > 0) {
      int_cost += 0.5 * (prev_cost + cost_now) * h;
      int_x2 += 0.5 * (prev_x2 + x2_now) * h;
      int_exc += 0.5 * (prev_exc + exc_now) * h;
    }
    prev_cost = cost_now;
    prev_x2 = x2_now;
    prev_exc = exc_now;
    rec.max_x_norm = std::max(rec.max_x_norm, x.norm());

    while (next_dyadic <= rec.T_final + 1e-9 && t >= next_dyadic - 1e-9) {
      push_checkpoint(t);
      next_dyadic *= 2.0;
    }
    if (i % stride == 0 || i == nsteps) log_row(t, cost_now);
    if (i == nsteps) break;

    for (int j = 0; j < p; ++j) dw[j] = sqrt_h * wstream.gaussian();
    dx.noalias() = model.A * (x * h);
    dx.noalias() += model.B * (u * h);
    dx.noalias() += model.D * dw;
    w_acc += dw;
    if (adaptive) {
      for (int j = 0; j < m; ++j) dv[j] = sqrt_h * vstream.gaussian();
      phi << x, u;
      est.update(phi, dx, h);
      v += dv;
    }
    x += dx;

    if (!x.allFinite() || x.norm() > opt.blowup_cap) {
      rec.aborted = true;
      rec.abort_reason = x.allFinite() ? "state norm exceeded blowup cap" : "non-finite state";
      rec.T_final = static_cast<double>(i + 1) * h;
      break;
    }

    if (adaptive) {
      const double t_next = static_cast<double>(i + 1) * h;
      while (next_k <= k_max && t_next >= static_cast<double>(next_k) - 1e-9) {
        regularize::step(reg, est.theta, est.P, Qh, next_k);
        ctrl = control::refresh(ctrl, reg.theta_hat, model.Q, model.R, next_k, v,
                                !reg.last_event.degenerate, opt.care_tol);
        IntervalRecord ir;
        ir.k = next_k;
        ir.log_f_eta = reg.last_event.log_f_eta;
        ir.log_f_prev = reg.last_event.log_f_prev;
        ir.log_f = reg.log_f_current;
        ir.switched = reg.last_event.switched;
        ir.degenerate = reg.last_event.degenerate;
        ir.fell_back = ctrl.fell_back;
        ir.gain_delta = ctrl.gain_delta;
        if (!ctrl.fell_back)
          ir.closed_loop_margin = matkit::spectral_abscissa(ctrl.closed_loop);
        rec.intervals.push_back(ir);
        rec.theta_hat_by_k.push_back(reg.theta_hat);
        rec.gram_by_k.push_back(est.gram_unweighted);
        if (ir.switched) ++rec.beta_switches;
        if (ir.fell_back) ++rec.fallback_intervals;
        if (ir.degenerate) ++rec.degenerate_intervals;
        ++next_k;
      }
    }
  }

  const double covered = rec.aborted ? rec.T_final - h : rec.T_final;
  if (covered > 0.0) {
    rec.J_hat = int_cost / covered;
    rec.avg_x2 = int_x2 / covered;
  }
  if (rec.checkpoints.empty() || rec.checkpoints.back().t != rec.T_final) {
    if (!rec.aborted) push_checkpoint(rec.T_final);
  }
  if (adaptive) {
    rec.theta_err_full_final = (reg.theta_hat - theta_true).norm();
    rec.theta_err_masked_final =
        (subspace::masked_estimate(reg.theta_hat, dec) - masked_true).norm();
  }
  return rec;
}

}  // namespace detail

/// Closed-loop integration of the plant under the adaptive law: per
/// micro-step Euler-Maruyama with independent seeded noise and excitation
/// streams, per unit interval the regularizer update followed by the
/// controller refresh.
inline RunRecord simulate(const SystemModel& model, const RunOptions& opt) {
  return detail::run(model, opt, detail::Mode::adaptive);
}

/// Baseline: the same integration driven by the fixed true-parameter optimal
/// gain with zero excitation and no adaptation.
inline RunRecord run_oracle(const SystemModel& model, const RunOptions& opt) {
  return detail::run(model, opt, detail::Mode::oracle);
}

}  // namespace alqg::sim
