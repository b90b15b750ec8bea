#pragma once

#include <Eigen/Core>

namespace lexifactor {

struct JacobiOptions {
  // A column pair counts as orthogonal once |a_p . a_q| / (|a_p| |a_q|)
  // falls below this.
  double tolerance = 1e-12;
  int max_sweeps = 60;
};

struct SvdResult {
  Eigen::MatrixXd U;  // m x p, orthonormal columns
  Eigen::VectorXd S;  // p values, nonincreasing
  Eigen::MatrixXd V;  // n x p, orthonormal columns
  int sweeps = 0;
  bool converged = false;
};

// Thin SVD (p = min(m, n)) by one-sided (Hestenes) Jacobi rotations applied
// to the columns of A, or of A^T when A is wide. Columns of V are oriented
// so their largest-magnitude entry is positive (first index wins ties).
// Left vectors for numerically-zero singular values are completed to an
// orthonormal set.
SvdResult jacobi_svd(const Eigen::MatrixXd& A, const JacobiOptions& options = {});

}  // namespace lexifactor
