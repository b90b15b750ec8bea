#include "lexifactor/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lexifactor/error.hpp"

namespace lexifactor {

namespace {

struct OneSided {
  Eigen::MatrixXd W;  // rotated columns; W = A * Q
  Eigen::MatrixXd Q;  // accumulated rotations
  int sweeps = 0;
  bool converged = false;
};

OneSided hestenes(Eigen::MatrixXd A, const JacobiOptions& options) {
  const Eigen::Index n = A.cols();
  OneSided r{std::move(A), Eigen::MatrixXd::Identity(n, n)};
  // Columns below this norm are exact zeros for all practical purposes and
  // would only produce meaningless rotations.
  const double negligible = 1e-15 * r.W.norm();
  const double negligible2 = negligible * negligible;

  while (r.sweeps < options.max_sweeps) {
    ++r.sweeps;
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = r.W.col(p).squaredNorm();
        const double beta = r.W.col(q).squaredNorm();
        if (alpha <= negligible2 || beta <= negligible2) continue;
        const double gamma = r.W.col(p).dot(r.W.col(q));
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < r.W.rows(); ++k) {
          const double wp = r.W(k, p);
          const double wq = r.W(k, q);
          r.W(k, p) = c * wp - s * wq;
          r.W(k, q) = s * wp + c * wq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vp = r.Q(k, p);
          const double vq = r.Q(k, q);
          r.Q(k, p) = c * vp - s * vq;
          r.Q(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// Replaces the listed columns of M with unit vectors orthogonal to every
// other column.
void complete_orthonormal(Eigen::MatrixXd& M, const std::vector<Eigen::Index>& missing) {
  if (missing.empty()) return;
  std::vector<char> is_missing(static_cast<std::size_t>(M.cols()), 0);
  for (auto c : missing) is_missing[static_cast<std::size_t>(c)] = 1;
  std::vector<Eigen::Index> basis;
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    if (!is_missing[static_cast<std::size_t>(c)]) basis.push_back(c);
  }
  for (auto c : missing) {
    // The unit vector with the largest residual against the current basis.
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(M.rows(), M.rows());
    for (auto b : basis) R -= M.col(b) * (M.col(b).transpose() * R);
    Eigen::Index best = 0;
    if (R.colwise().norm().maxCoeff(&best) <= 1e-8) throw RuntimeError("svd: cannot complete orthonormal basis");
    Eigen::VectorXd v = R.col(best);
    for (auto b : basis) v -= M.col(b).dot(v) * M.col(b);
    M.col(c) = v / v.norm();
    basis.push_back(c);
  }
}

}  // namespace

SvdResult jacobi_svd(const Eigen::MatrixXd& A, const JacobiOptions& options) {
  if (A.rows() == 0 || A.cols() == 0) throw ValidationError("svd: empty matrix");
  if (!A.allFinite()) throw ValidationError("svd: non-finite entry");
  const bool wide = A.rows() < A.cols();
  auto rot = hestenes(wide ? Eigen::MatrixXd(A.transpose()) : A, options);

  // rot.W = B * Q with B = A (tall) or A^T (wide). Column norms of W are the
  // singular values; normalized columns are the vectors on B's row side.
  const Eigen::Index p = rot.W.cols();
  Eigen::VectorXd norms(p);
  for (Eigen::Index j = 0; j < p; ++j) norms(j) = rot.W.col(j).norm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return norms(a) > norms(b); });

  const double negligible = 1e-15 * rot.W.norm();
  Eigen::MatrixXd left(rot.W.rows(), p);   // row side of B
  Eigen::MatrixXd right(rot.Q.rows(), p);  // column side of B
  Eigen::VectorXd S(p);
  std::vector<Eigen::Index> missing;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    S(j) = norms(src);
    right.col(j) = rot.Q.col(src);
    if (S(j) > negligible && S(j) > 0.0) {
      left.col(j) = rot.W.col(src) / S(j);
    } else {
      S(j) = 0.0;
      left.col(j).setZero();
      missing.push_back(j);
    }
  }
  complete_orthonormal(left, missing);

  SvdResult out;
  out.S = std::move(S);
  out.U = wide ? std::move(right) : std::move(left);
  out.V = wide ? std::move(left) : std::move(right);
  out.sweeps = rot.sweeps;
  out.converged = rot.converged;

  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < out.V.rows(); ++i) {
      if (std::abs(out.V(i, j)) > best) {
        best = std::abs(out.V(i, j));
        arg = i;
      }
    }
    if (out.V(arg, j) < 0.0) {
      out.V.col(j) = -out.V.col(j);
      out.U.col(j) = -out.U.col(j);
    }
  }
  return out;
}

}  // namespace lexifactor
