#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace alqg::matkit {

/// Eigenvalues of a real square matrix, with algebraic multiplicity.
/// Complex values occur in exact conjugate pairs (enforced after the solve).
struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  int source_dim = 0;
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Pair nearly-conjugate eigenvalues and symmetrize them exactly; values with
// tiny imaginary part collapse onto the real axis. Downstream certificate
// products assume exact pairing.
inline void enforce_conjugate_pairs(std::vector<std::complex<double>>& ev, double scale) {
  const double tol = 1e-8 * std::max(scale, 1e-300);
  std::vector<bool> done(ev.size(), false);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (done[i]) continue;
    if (std::abs(ev[i].imag()) <= tol) {
      ev[i].imag(0.0);
      done[i] = true;
      continue;
    }
    std::size_t best = i;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (done[j]) continue;
      const double d = std::abs(std::conj(ev[i]) - ev[j]);
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best != i && best_dist < tol) {
      const std::complex<double> mean = 0.5 * (ev[i] + std::conj(ev[best]));
      ev[i] = mean;
      ev[best] = std::conj(mean);
      done[i] = done[best] = true;
    } else {
      done[i] = true;
    }
  }
}

}  // namespace detail

/// All eigenvalues of M with multiplicity.
inline Spectrum spectrum(const Eigen::MatrixXd& M) {
  detail::require(M.rows() == M.cols(), "spectrum: matrix must be square");
  detail::require(M.allFinite(), "spectrum: matrix has non-finite entries");
  Spectrum s;
  s.source_dim = static_cast<int>(M.rows());
  if (M.rows() == 0) return s;

  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectrum: eigenvalue iteration failed to converge");

  s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + M.rows());
  detail::enforce_conjugate_pairs(s.eigenvalues, M.norm());
  return s;
}

/// Partition a spectrum by half-plane. Values with Re >= -tol land in `plus`
/// (the closed right half-plane, widened by a tolerance band so that
/// eigenvalues jittering around the imaginary axis classify as boundary).
inline std::pair<std::vector<std::complex<double>>, std::vector<std::complex<double>>>
split_half_planes(const Spectrum& s, double tol = 1e-9) {
  detail::require(tol >= 0.0, "split_half_planes: tol must be nonnegative");
  std::pair<std::vector<std::complex<double>>, std::vector<std::complex<double>>> out;
  for (const auto& ev : s.eigenvalues) {
    if (ev.real() >= -tol)
      out.first.push_back(ev);
    else
      out.second.push_back(ev);
  }
  return out;
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-10*|M|, 0) are clamped to zero; anything more negative is an error.
inline Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& M) {
  detail::require(M.rows() == M.cols(), "sym_sqrt: matrix must be square");
  const double scale = std::max(M.norm(), 1.0);
  if ((M - M.transpose()).norm() > 1e-10 * scale)
    throw std::invalid_argument("sym_sqrt: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_sqrt: eigendecomposition failed");

  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < -1e-10 * scale)
      throw std::invalid_argument("sym_sqrt: matrix is indefinite beyond clamp tolerance");
    lam[i] = std::max(lam[i], 0.0);
  }
  Eigen::MatrixXd S = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();
  return 0.5 * (S + S.transpose());
}

/// Orthonormal basis of the column space of M. Directions whose singular
/// value falls below rank_tol * sigma_max are dropped. Column signs are
/// normalized (largest-magnitude entry positive) so bases are deterministic.
inline Eigen::MatrixXd orthonormal_range(const Eigen::MatrixXd& M, double rank_tol = 1e-8) {
  detail::require(rank_tol > 0.0, "orthonormal_range: rank_tol must be positive");
  if (M.size() == 0 || M.norm() == 0.0) return Eigen::MatrixXd(M.rows(), 0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv[rank] > rank_tol * sv[0]) ++rank;

  Eigen::MatrixXd V = svd.matrixU().leftCols(rank);
  for (int j = 0; j < V.cols(); ++j) {
    int imax = 0;
    V.col(j).cwiseAbs().maxCoeff(&imax);
    if (V(imax, j) < 0.0) V.col(j) = -V.col(j);
  }
  return V;
}

/// Extend an orthonormal basis (n x k) to a full orthonormal basis of R^n;
/// returns the n-k complement columns.
inline Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& V, int n) {
  detail::require(V.rows() == n || V.size() == 0, "orthonormal_complement: dimension mismatch");
  const int k = static_cast<int>(V.cols());
  if (k == 0) return Eigen::MatrixXd::Identity(n, n);
  if (k >= n) return Eigen::MatrixXd(n, 0);
  // Complement = null space of V^T, read off the full SVD.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullU);
  Eigen::MatrixXd W = svd.matrixU().rightCols(n - k);
  for (int j = 0; j < W.cols(); ++j) {
    int imax = 0;
    W.col(j).cwiseAbs().maxCoeff(&imax);
    if (W(imax, j) < 0.0) W.col(j) = -W.col(j);
  }
  return W;
}

/// True iff every eigenvalue of M satisfies Re < -margin.
inline bool is_hurwitz(const Eigen::MatrixXd& M, double margin = 0.0) {
  const Spectrum s = spectrum(M);
  return std::all_of(s.eigenvalues.begin(), s.eigenvalues.end(),
                     [margin](const std::complex<double>& ev) { return ev.real() < -margin; });
}

/// Largest real part over the spectrum of M (spectral abscissa).
inline double spectral_abscissa(const Eigen::MatrixXd& M) {
  const Spectrum s = spectrum(M);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& ev : s.eigenvalues) worst = std::max(worst, ev.real());
  return worst;
}

}  // namespace alqg::matkit
