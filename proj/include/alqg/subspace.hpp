#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "alqg/matkit.hpp"

namespace alqg::subspace {

/// Change of basis splitting the state space into the noise-and-input
/// reachable subspace and its orthogonal complement, with the system blocks
/// read off in that basis. U is orthonormal, so U^{-1} = U^T.
struct Decomposition {
  Eigen::MatrixXd U;   // n x n, columns: reachable basis then complement
  int n1 = 0;          // dim of the reachable subspace
  Eigen::MatrixXd A1;  // n1 x n1
  Eigen::MatrixXd A2;  // n1 x (n-n1)
  Eigen::MatrixXd A3;  // (n-n1) x (n-n1)
  Eigen::MatrixXd B1;  // n1 x m
  Eigen::MatrixXd D1;  // n1 x p
};

/// Orthonormal basis of Im(B0) + A Im(B0) + ... + A^{n-1} Im(B0) with the
/// rank decided by singular values against rank_tol.
inline std::pair<Eigen::MatrixXd, int> controllable_subspace(const Eigen::MatrixXd& A,
                                                             const Eigen::MatrixXd& B0,
                                                             double rank_tol = 1e-8) {
  const int n = static_cast<int>(A.rows());
  const int w = static_cast<int>(B0.cols());
  Eigen::MatrixXd krylov(n, n * std::max(w, 1));
  if (w == 0) return {Eigen::MatrixXd(n, 0), 0};

  Eigen::MatrixXd block = B0;
  for (int i = 0; i < n; ++i) {
    krylov.middleCols(i * w, w) = block;
    if (i + 1 < n) block = A * block;
  }
  Eigen::MatrixXd basis = matkit::orthonormal_range(krylov, rank_tol);
  const int n1 = static_cast<int>(basis.cols());
  return {std::move(basis), n1};
}

/// Assemble the full decomposition for the plant (A, B, D) with B0 = [B, D].
/// The block structure is verified before returning; a failure means
/// rank_tol misclassified the subspace.
inline Decomposition build_decomposition(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                         const Eigen::MatrixXd& D, double rank_tol = 1e-8) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd B0(n, B.cols() + D.cols());
  B0 << B, D;

  auto [basis, n1] = controllable_subspace(A, B0, rank_tol);
  Eigen::MatrixXd U(n, n);
  U << basis, matkit::orthonormal_complement(basis, n);

  Decomposition dec;
  dec.U = U;
  dec.n1 = n1;
  const Eigen::MatrixXd Abar = U.transpose() * A * U;
  const Eigen::MatrixXd Bbar = U.transpose() * B;
  const Eigen::MatrixXd Dbar = U.transpose() * D;
  dec.A1 = Abar.topLeftCorner(n1, n1);
  dec.A2 = Abar.topRightCorner(n1, n - n1);
  dec.A3 = Abar.bottomRightCorner(n - n1, n - n1);
  dec.B1 = Bbar.topRows(n1);
  dec.D1 = Dbar.topRows(n1);

  const double scale = std::max({A.norm(), B.norm(), D.norm(), 1.0});
  if (Abar.bottomLeftCorner(n - n1, n1).norm() > 10 * rank_tol * scale ||
      Bbar.bottomRows(n - n1).norm() > 10 * rank_tol * scale ||
      Dbar.bottomRows(n - n1).norm() > 10 * rank_tol * scale)
    throw std::runtime_error(
        "build_decomposition: block-triangular structure check failed "
        "(rank_tol misclassified the reachable subspace)");
  return dec;
}

/// Span of the information-Gram eigenvectors whose eigenvalue lies strictly
/// below log k (natural log): the directions the data has not excited.
inline Eigen::MatrixXd weak_excitation_space(const Eigen::MatrixXd& gram, int k) {
  if (k < 2) throw std::invalid_argument("weak_excitation_space: k must be >= 2");
  const double threshold = std::log(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("weak_excitation_space: eigendecomposition failed");

  int count = 0;
  while (count < es.eigenvalues().size() && es.eigenvalues()[count] < threshold) ++count;
  return es.eigenvectors().leftCols(count);
}

/// Similarity-transformed estimate with the unreachable state columns
/// masked out: U^{-1} theta^T diag(U, I_m) diag(I_{n1}, 0, I_m). For the true
/// parameters this is [[A1, 0, B1], [0, 0, 0]]; the consistency theory says
/// only these entries are recoverable from closed-loop data.
inline Eigen::MatrixXd masked_estimate(const Eigen::MatrixXd& theta_hat,
                                       const Decomposition& dec) {
  const int n = static_cast<int>(dec.U.rows());
  const int m = static_cast<int>(theta_hat.rows()) - n;
  if (theta_hat.cols() != n || m < 0)
    throw std::invalid_argument("masked_estimate: theta/decomposition dimension mismatch");

  Eigen::MatrixXd out(n, n + m);
  out.leftCols(n) = dec.U.transpose() * theta_hat.topRows(n).transpose() * dec.U;
  out.rightCols(m) = dec.U.transpose() * theta_hat.bottomRows(m).transpose();
  out.middleCols(dec.n1, n - dec.n1).setZero();
  return out;
}

/// Sines of the principal angles between the spans of two orthonormal bases.
/// Returns the largest sine (the subspace distance); 0 for two empty bases.
inline double subspace_distance(const Eigen::MatrixXd& V1, const Eigen::MatrixXd& V2) {
  if (V1.cols() != V2.cols())
    return 1.0;  // different dimensions: maximally apart by convention
  if (V1.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V1.transpose() * V2);
  const double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

/// Data-driven recovery of the decomposition basis: the x-parts of the weak
/// directions estimate the unreachable complement, and the assembled
/// orthonormal U puts the reachable-estimate columns first. Errors out when
/// a weak direction carries a control component above u_tol, i.e. the data
/// does not yet separate the subspaces. Callers should only trust the result
/// once the weak-space dimension has stabilized across checkpoints.
inline std::pair<Eigen::MatrixXd, int> infer_decomposition_from_data(
    const Eigen::MatrixXd& gram, int n, int m, int k, double u_tol = 0.1,
    double rank_tol = 1e-8) {
  if (gram.rows() != n + m || gram.cols() != n + m)
    throw std::invalid_argument("infer_decomposition_from_data: gram must be (n+m) square");
  const Eigen::MatrixXd weak = weak_excitation_space(gram, k);

  for (int j = 0; j < weak.cols(); ++j) {
    if (weak.col(j).tail(m).norm() > u_tol)
      throw std::runtime_error(
          "infer_decomposition_from_data: weak direction has a control component; "
          "data insufficient to identify the unreachable subspace");
  }

  const Eigen::MatrixXd weak_x = matkit::orthonormal_range(weak.topRows(n), rank_tol);
  const int n1 = n - static_cast<int>(weak_x.cols());
  if (weak.cols() == 0) return {Eigen::MatrixXd::Identity(n, n), n};

  Eigen::MatrixXd U(n, n);
  U << matkit::orthonormal_complement(weak_x, n), weak_x;
  return {std::move(U), n1};
}

}  // namespace alqg::subspace
