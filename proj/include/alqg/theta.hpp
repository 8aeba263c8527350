#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace alqg {

// Parameter matrices travel as a single (n+m) x n block theta with
// theta^T = [A, B]: the top n rows of theta are A^T, the bottom m rows B^T.

inline Eigen::MatrixXd pack_theta(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw std::invalid_argument("pack_theta: inconsistent dimensions");
  Eigen::MatrixXd theta(A.rows() + B.cols(), A.rows());
  theta.topRows(A.rows()) = A.transpose();
  theta.bottomRows(B.cols()) = B.transpose();
  return theta;
}

inline Eigen::MatrixXd theta_A(const Eigen::MatrixXd& theta) {
  const auto n = theta.cols();
  if (theta.rows() < n) throw std::invalid_argument("theta_A: malformed theta");
  return theta.topRows(n).transpose();
}

inline Eigen::MatrixXd theta_B(const Eigen::MatrixXd& theta) {
  const auto n = theta.cols();
  if (theta.rows() < n) throw std::invalid_argument("theta_B: malformed theta");
  return theta.bottomRows(theta.rows() - n).transpose();
}

}  // namespace alqg
