#include <doctest.h>

#include <numeric>

#include <Eigen/Eigenvalues>

#include "lexifactor/error.hpp"
#include "lexifactor/svd.hpp"
#include "test_util.hpp"

using namespace lexifactor;

namespace {

void check_factorization(const Eigen::MatrixXd& A, const SvdResult& r) {
  const auto p = std::min(A.rows(), A.cols());
  REQUIRE(r.U.cols() == p);
  REQUIRE(r.V.cols() == p);
  REQUIRE(r.S.size() == p);
  const double scale = std::max(1.0, A.norm());
  CHECK((r.U * r.S.asDiagonal() * r.V.transpose() - A).norm() <= 1e-10 * scale);
  CHECK((r.U.transpose() * r.U - Eigen::MatrixXd::Identity(p, p)).norm() <= 1e-10);
  CHECK((r.V.transpose() * r.V - Eigen::MatrixXd::Identity(p, p)).norm() <= 1e-10);
  for (Eigen::Index i = 0; i < p; ++i) {
    CHECK(r.S(i) >= 0.0);
    if (i > 0) CHECK(r.S(i) <= r.S(i - 1));
  }
}

// Singular values from the eigenvalues of the Gram matrix.
Eigen::VectorXd gram_singular_values(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd G = A.rows() >= A.cols() ? Eigen::MatrixXd(A.transpose() * A)
                                                 : Eigen::MatrixXd(A * A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  return ev.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

TEST_CASE("diagonal and small examples") {
  Eigen::MatrixXd A(3, 2);
  A << 3, 0, 0, -4, 0, 0;
  const auto r = jacobi_svd(A);
  CHECK(r.converged);
  CHECK(r.S(0) == doctest::Approx(4.0));
  CHECK(r.S(1) == doctest::Approx(3.0));
  check_factorization(A, r);

  Eigen::MatrixXd B(2, 2);
  B << 1, 1, 1, 1;
  const auto rb = jacobi_svd(B);
  CHECK(rb.S(0) == doctest::Approx(2.0));
  CHECK(std::abs(rb.S(1)) <= 1e-14);
  check_factorization(B, rb);
}

TEST_CASE("rank one") {
  Rng rng(5);
  Eigen::VectorXd a = testutil::random_matrix(rng, 7, 1).col(0).normalized();
  Eigen::VectorXd b = testutil::random_matrix(rng, 4, 1).col(0).normalized();
  const auto r = jacobi_svd(2.5 * a * b.transpose());
  CHECK(r.S(0) == doctest::Approx(2.5).epsilon(1e-12));
  for (Eigen::Index i = 1; i < r.S.size(); ++i) CHECK(r.S(i) <= 1e-12);
  CHECK(std::abs(std::abs(r.U.col(0).dot(a)) - 1.0) <= 1e-12);
  CHECK(std::abs(std::abs(r.V.col(0).dot(b)) - 1.0) <= 1e-12);
  check_factorization(2.5 * a * b.transpose(), r);
}

TEST_CASE("property: random shapes") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = static_cast<Eigen::Index>(1 + rng.below(30));
    const auto n = static_cast<Eigen::Index>(1 + rng.below(30));
    const auto A = testutil::random_matrix(rng, m, n);
    const auto r = jacobi_svd(A);
    CHECK(r.converged);
    check_factorization(A, r);
    const auto oracle = gram_singular_values(A);
    for (Eigen::Index i = 0; i < r.S.size(); ++i) {
      CHECK(std::abs(r.S(i) - oracle(i)) <= 1e-8 * std::max(1.0, oracle(0)));
    }
    // Orientation: largest-magnitude entry of each right vector is positive.
    for (Eigen::Index c = 0; c < r.V.cols(); ++c) {
      Eigen::Index at = 0;
      r.V.col(c).cwiseAbs().maxCoeff(&at);
      CHECK(r.V(at, c) > 0.0);
    }
  }
}

TEST_CASE("rank-deficient matrices") {
  Rng rng(5);
  for (int rank : {1, 3}) {
    const auto L = testutil::random_matrix(rng, 40, rank);
    const auto R = testutil::random_matrix(rng, rank, 12);
    const Eigen::MatrixXd A = L * R;
    const auto r = jacobi_svd(A);
    check_factorization(A, r);
    for (Eigen::Index i = rank; i < r.S.size(); ++i) CHECK(r.S(i) <= 1e-10 * r.S(0));
  }
  const auto z = jacobi_svd(Eigen::MatrixXd::Zero(4, 3));
  CHECK(z.S.isZero());
  CHECK((z.U.transpose() * z.U - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("row permutation permutes U and leaves S, V") {
  Rng rng(8);
  const auto A = testutil::random_matrix(rng, 25, 7);
  std::vector<int> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Eigen::MatrixXd B(25, 7);
  for (int i = 0; i < 25; ++i) B.row(i) = A.row(perm[static_cast<std::size_t>(i)]);
  const auto ra = jacobi_svd(A);
  const auto rb = jacobi_svd(B);
  CHECK((ra.S - rb.S).norm() <= 1e-10);
  CHECK((ra.V - rb.V).norm() <= 1e-8);
  for (int i = 0; i < 25; ++i) {
    CHECK((rb.U.row(i) - ra.U.row(perm[static_cast<std::size_t>(i)])).norm() <= 1e-8);
  }
}

TEST_CASE("deterministic") {
  Rng rng(1);
  const auto A = testutil::random_matrix(rng, 50, 20);
  const auto a = jacobi_svd(A);
  const auto b = jacobi_svd(A);
  CHECK(a.U == b.U);
  CHECK(a.S == b.S);
  CHECK(a.V == b.V);
}
