#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <tuple>

#include "alqg/matkit.hpp"

namespace alqg::riccati {

/// Thrown when a CARE/Lyapunov/Sylvester solve cannot produce the requested
/// solution (wrong stable-subspace dimension, singular solve, divergence).
struct SolveError : std::runtime_error {
  explicit SolveError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CareProblem {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd Q;  // n x n, symmetric PSD
  Eigen::MatrixXd R;  // m x m, symmetric PD
};

struct CareSolution {
  Eigen::MatrixXd X;          // stabilizing solution, symmetric PSD
  Eigen::MatrixXd L;          // feedback gain, L = -R^{-1} B^T X
  double residual_norm = 0;   // Frobenius norm of the equation residual
  double closed_loop_margin = 0;  // max Re eigenvalue of A + B L (< 0)
};

namespace detail {

inline void validate_problem(const CareProblem& p) {
  const auto n = p.A.rows();
  const auto m = p.B.cols();
  if (p.A.cols() != n || p.B.rows() != n || p.Q.rows() != n || p.Q.cols() != n ||
      p.R.rows() != m || p.R.cols() != m)
    throw std::invalid_argument("solve_care: inconsistent dimensions");
  const double qs = std::max(p.Q.norm(), 1.0);
  if ((p.Q - p.Q.transpose()).norm() > 1e-10 * qs)
    throw std::invalid_argument("solve_care: Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(0.5 * (p.Q + p.Q.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (qe.eigenvalues().minCoeff() < -1e-10 * qs)
    throw std::invalid_argument("solve_care: Q is not positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> re(0.5 * (p.R + p.R.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if ((p.R - p.R.transpose()).norm() > 1e-10 * std::max(p.R.norm(), 1.0) ||
      re.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("solve_care: R is not symmetric positive definite");
}

// Reorder a complex Schur form (H = Q T Q^H, T upper triangular) so that
// eigenvalues satisfying `stable` come first, via adjacent Givens-style swaps.
template <typename Pred>
inline void order_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Q, Pred stable) {
  using C = std::complex<double>;
  const int N = static_cast<int>(T.rows());

  auto swap_adjacent = [&](int i) {
    const C a = T(i, i), b = T(i, i + 1), c = T(i + 1, i + 1);
    // Unitary G whose first column is the (normalized) eigenvector [b; c-a]
    // of the 2x2 block for eigenvalue c; conjugation swaps the diagonal.
    const double r = std::sqrt(std::norm(b) + std::norm(c - a));
    if (r == 0.0) return;  // equal eigenvalues, nothing to move
    Eigen::Matrix2cd G;
    G << b / r, -std::conj(c - a) / r, (c - a) / r, std::conj(b) / r;
    T.block(i, i, 2, N - i) = G.adjoint() * T.block(i, i, 2, N - i);
    T.block(0, i, i + 2, 2) = T.block(0, i, i + 2, 2) * G;
    Q.block(0, i, N, 2) = Q.block(0, i, N, 2) * G;
    T(i + 1, i) = C(0.0, 0.0);
  };

  int filled = 0;
  for (int j = 0; j < N; ++j) {
    if (!stable(T(j, j))) continue;
    for (int p = j; p > filled; --p) swap_adjacent(p - 1);
    ++filled;
  }
}

}  // namespace detail

/// Solve M^T X + X M + W = 0 for symmetric X (M Hurwitz, W symmetric),
/// by the Kronecker-product linearization. Intended for small dimensions.
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || W.rows() != n || W.cols() != n)
    throw std::invalid_argument("solve_lyapunov: inconsistent dimensions");
  if (n == 0) return Eigen::MatrixXd(0, 0);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd Mt = M.transpose();
  for (int j = 0; j < n; ++j) {        // vec(M^T X): I (x) M^T
    K.block(j * n, j * n, n, n) += Mt;
  }
  for (int j = 0; j < n; ++j) {        // vec(X M): M^T (x) I
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) K(i + j * n, i + k * n) += M(k, j);
    }
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  Eigen::VectorXd z = lu.solve(rhs);
  if (!z.allFinite()) throw SolveError("solve_lyapunov: singular linearization");
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(z.data(), n, n);
  return 0.5 * (X + X.transpose());
}

/// Solve M X + X N + C = 0 with X of shape p x q (Sylvester equation).
inline Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                                       const Eigen::MatrixXd& C) {
  const int p = static_cast<int>(M.rows());
  const int q = static_cast<int>(N.rows());
  if (M.cols() != p || N.cols() != q || C.rows() != p || C.cols() != q)
    throw std::invalid_argument("solve_sylvester: inconsistent dimensions");
  if (p == 0 || q == 0) return Eigen::MatrixXd(p, q);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p * q, p * q);
  for (int j = 0; j < q; ++j) {        // vec(M X): I_q (x) M
    K.block(j * p, j * p, p, p) += M;
  }
  for (int j = 0; j < q; ++j) {        // vec(X N): N^T (x) I_p
    for (int i = 0; i < p; ++i) {
      for (int k = 0; k < q; ++k) K(i + j * p, i + k * p) += N(k, j);
    }
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), p * q);
  Eigen::VectorXd z = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(rhs);
  if (!z.allFinite()) throw SolveError("solve_sylvester: singular linearization");
  return Eigen::Map<Eigen::MatrixXd>(z.data(), p, q);
}

/// One Newton (Kleinman) step for the CARE: given a stabilizing iterate X,
/// returns the solution of (A - S X)^T X' + X'(A - S X) + Q + X S X = 0.
inline Eigen::MatrixXd kleinman_refine(const CareProblem& p, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd S =
      p.B * p.R.llt().solve(p.B.transpose());
  const Eigen::MatrixXd Acl = p.A - S * X;
  return solve_lyapunov(Acl, p.Q + X * S * X);
}

/// Stabilizing solution of A^T X + X A + Q - X B R^{-1} B^T X = 0.
///
/// Method: complex Schur form of the 2n x 2n Hamiltonian, eigenvalue
/// reordering to bring the open-left-half-plane block first, X from the
/// stable invariant subspace, then Kleinman refinement until the relative
/// residual meets tol.
inline CareSolution solve_care(const CareProblem& p, double tol = 1e-9) {
  detail::validate_problem(p);
  const int n = static_cast<int>(p.A.rows());

  const Eigen::MatrixXd S = p.B * p.R.llt().solve(p.B.transpose());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << p.A, -S, -p.Q, -p.A.transpose();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success)
    throw SolveError("solve_care: Schur iteration failed to converge");
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  const auto stable = [](const std::complex<double>& ev) { return ev.real() < 0.0; };
  int n_stable = 0;
  for (int i = 0; i < 2 * n; ++i)
    if (stable(T(i, i))) ++n_stable;
  if (n_stable != n)
    throw SolveError(
        "solve_care: Hamiltonian has no stable invariant subspace of dimension n "
        "(input pair not stabilizable/detectable)");

  detail::order_schur(T, U, stable);

  const Eigen::MatrixXcd U1 = U.topLeftCorner(n, n);
  const Eigen::MatrixXcd U2 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(U1);
  if (!lu.isInvertible())
    throw SolveError("solve_care: stable subspace basis is degenerate");
  Eigen::MatrixXd X = (U2 * lu.inverse()).real();
  X = 0.5 * (X + X.transpose());

  const auto residual = [&](const Eigen::MatrixXd& Xc) {
    return (p.A.transpose() * Xc + Xc * p.A + p.Q - Xc * S * Xc).norm();
  };
  const auto rel = [&](const Eigen::MatrixXd& Xc, double r) {
    return r / (1.0 + Xc.squaredNorm());
  };

  // Kleinman polish: always one pass, more only while it helps.
  double res = residual(X);
  for (int iter = 0; iter < 5; ++iter) {
    Eigen::MatrixXd Xn;
    try {
      Xn = kleinman_refine(p, X);
    } catch (const SolveError&) {
      break;
    }
    const double resn = residual(Xn);
    if (!(resn < res) && iter > 0) break;
    if (resn < res) {
      X = std::move(Xn);
      res = resn;
    }
    if (rel(X, res) <= tol) break;
  }
  if (rel(X, res) > tol)
    throw SolveError("solve_care: refinement did not reach the requested residual");

  CareSolution sol;
  sol.X = X;
  sol.L = -p.R.llt().solve(p.B.transpose() * X);
  sol.residual_norm = res;
  sol.closed_loop_margin = matkit::spectral_abscissa(p.A + p.B * sol.L);
  if (!(sol.closed_loop_margin < 0.0))
    throw SolveError("solve_care: computed solution is not stabilizing");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xe(sol.X, Eigen::EigenvaluesOnly);
  if (xe.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, sol.X.norm()))
    throw SolveError("solve_care: computed solution is not positive semidefinite");
  return sol;
}

/// Optimal ergodic cost tr(D^T X D) for the stabilizing CARE solution.
inline double oracle_cost(const CareProblem& p, const Eigen::MatrixXd& D, double tol = 1e-9) {
  if (D.rows() != p.A.rows()) throw std::invalid_argument("oracle_cost: D has wrong row count");
  const CareSolution sol = solve_care(p, tol);
  return (D.transpose() * sol.X * D).trace();
}

struct BlockCareSolution {
  Eigen::MatrixXd X1;  // n1 x n1, Riccati block
  Eigen::MatrixXd X2;  // n1 x (n-n1), Sylvester block
  Eigen::MatrixXd X3;  // (n-n1) x (n-n1), Lyapunov block
};

/// Solve the ARE of a block upper-triangular system
///   Abar = [A1 A2; 0 A3], Bbar = [B1; 0], Qbar = [Q1 Q2; Q2^T Q3]
/// as the chain Riccati -> Sylvester -> Lyapunov. A3 must be Hurwitz.
/// The reassembled [X1 X2; X2^T X3] solves the full ARE for (Abar, Bbar).
inline BlockCareSolution solve_block_care(const Eigen::MatrixXd& Abar,
                                          const Eigen::MatrixXd& Bbar,
                                          const Eigen::MatrixXd& Qbar,
                                          const Eigen::MatrixXd& R, int n1,
                                          double tol = 1e-9) {
  const int n = static_cast<int>(Abar.rows());
  if (n1 < 0 || n1 > n) throw std::invalid_argument("solve_block_care: bad n1");
  const int n2 = n - n1;

  const Eigen::MatrixXd A1 = Abar.topLeftCorner(n1, n1);
  const Eigen::MatrixXd A2 = Abar.topRightCorner(n1, n2);
  const Eigen::MatrixXd A3 = Abar.bottomRightCorner(n2, n2);
  const Eigen::MatrixXd B1 = Bbar.topRows(n1);
  const Eigen::MatrixXd Q1 = Qbar.topLeftCorner(n1, n1);
  const Eigen::MatrixXd Q2 = Qbar.topRightCorner(n1, n2);
  const Eigen::MatrixXd Q3 = Qbar.bottomRightCorner(n2, n2);

  if (n2 > 0 && !matkit::is_hurwitz(A3))
    throw SolveError("solve_block_care: uncontrollable block A3 is not Hurwitz");

  BlockCareSolution out;
  const Eigen::MatrixXd S1 =
      n1 > 0 ? Eigen::MatrixXd(B1 * R.llt().solve(B1.transpose())) : Eigen::MatrixXd(0, 0);

  if (n1 > 0) {
    out.X1 = solve_care({A1, B1, Q1, R}, tol).X;
  } else {
    out.X1.resize(0, 0);
  }
  // (A1^T - X1 S1) X2 + X2 A3 + (Q2 + X1 A2) = 0
  if (n1 > 0 && n2 > 0) {
    out.X2 = solve_sylvester(A1.transpose() - out.X1 * S1, A3, Q2 + out.X1 * A2);
  } else {
    out.X2.resize(n1, n2);
  }
  // A3^T X3 + X3 A3 + (X2^T A2 + A2^T X2 + Q3 - X2^T S1 X2) = 0
  if (n2 > 0) {
    Eigen::MatrixXd W = Q3;
    if (n1 > 0)
      W += out.X2.transpose() * A2 + A2.transpose() * out.X2 -
           out.X2.transpose() * S1 * out.X2;
    out.X3 = solve_lyapunov(A3, W);
  } else {
    out.X3.resize(0, 0);
  }

  // Reassembly must satisfy the full equation.
  Eigen::MatrixXd X(n, n);
  X.topLeftCorner(n1, n1) = out.X1;
  X.topRightCorner(n1, n2) = out.X2;
  X.bottomLeftCorner(n2, n1) = out.X2.transpose();
  X.bottomRightCorner(n2, n2) = out.X3;
  const Eigen::MatrixXd Sbar = Bbar * R.llt().solve(Bbar.transpose());
  const double res =
      (Abar.transpose() * X + X * Abar + Qbar - X * Sbar * X).norm() / (1.0 + X.squaredNorm());
  if (res > std::max(tol, 1e-9) * 100)
    throw SolveError("solve_block_care: reassembled solution fails the full equation");
  return out;
}

}  // namespace alqg::riccati
