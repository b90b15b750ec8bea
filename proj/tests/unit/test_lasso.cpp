#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "lexifactor/error.hpp"
#include "lexifactor/lasso.hpp"
#include "test_util.hpp"

using namespace lexifactor;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd truth;
};

// Sparse linear model with `support` active features.
Problem sparse_problem(Rng& rng, Eigen::Index n, Eigen::Index p, int support, double noise) {
  Problem pr;
  pr.X = testutil::random_matrix(rng, n, p);
  pr.truth = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < support; ++j) pr.truth(j) = (j % 2 ? -1.0 : 1.0) * (1.0 + rng.uniform());
  pr.y = pr.X * pr.truth;
  for (auto& v : pr.y) v += noise * rng.normal();
  return pr;
}

Eigen::MatrixXd standardized(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X.rowwise() - X.colwise().mean();
  for (Eigen::Index j = 0; j < Z.cols(); ++j) Z.col(j) /= std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(Z.rows()));
  return Z;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("KKT conditions hold at the solution") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pr = sparse_problem(rng, 60, 15, 4, 0.5);
    const double lam = lambda_max(pr.X, pr.y) * (0.05 + 0.9 * rng.uniform());
    LassoOptions o;
    o.tolerance = 1e-12;
    const auto m = fit_lasso(pr.X, pr.y, lam, o);
    REQUIRE(m.converged);
    const auto Z = standardized(pr.X);
    const Eigen::VectorXd r = pr.y - m.decision(pr.X);
    const Eigen::VectorXd g = Z.transpose() * r / 60.0;
    for (Eigen::Index j = 0; j < 15; ++j) {
      if (m.weights(j) != 0.0) {
        CHECK(std::abs(g(j) - lam * (m.weights(j) > 0 ? 1.0 : -1.0)) <= 1e-8);
      } else {
        CHECK(std::abs(g(j)) <= lam + 1e-8);
      }
    }
  }
}

TEST_CASE("lambda_max zeroes every weight") {
  Rng rng(3);
  const auto pr = sparse_problem(rng, 40, 8, 3, 0.3);
  const double top = lambda_max(pr.X, pr.y);
  CHECK(fit_lasso(pr.X, pr.y, top).weights.isZero());
  CHECK(fit_lasso(pr.X, pr.y, 1.01 * top).weights.isZero());
  CHECK_FALSE(fit_lasso(pr.X, pr.y, 0.9 * top).weights.isZero());
  CHECK(fit_lasso(pr.X, pr.y, top).intercept == doctest::Approx(pr.y.mean()));
}

TEST_CASE("orthonormal design has the closed form") {
  // Columns with mean 0 and population std 1 that are mutually orthogonal:
  // the solution is soft_threshold(z_j . y / N, lambda).
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  Eigen::VectorXd y(4);
  y << 3, 1, -1, 0.5;
  for (double lam : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    const auto m = fit_lasso(X, y, lam);
    const Eigen::VectorXd zy = X.transpose() * (y.array() - y.mean()).matrix() / 4.0;
    CHECK(m.weights(0) == doctest::Approx(soft_threshold(zy(0), lam)).epsilon(1e-12));
    CHECK(m.weights(1) == doctest::Approx(soft_threshold(zy(1), lam)).epsilon(1e-12));
  }
}

TEST_CASE("lambda = 0 gives least squares") {
  Rng rng(4);
  const auto pr = sparse_problem(rng, 50, 6, 6, 0.2);
  LassoOptions o;
  o.tolerance = 1e-13;
  const auto m = fit_lasso(pr.X, pr.y, 0.0, o);
  Eigen::MatrixXd A(50, 7);
  A << pr.X, Eigen::VectorXd::Ones(50);
  const Eigen::VectorXd ols = A.colPivHouseholderQr().solve(pr.y);
  CHECK((m.decision(pr.X) - A * ols).norm() <= 1e-8);
}

TEST_CASE("path shrinks monotonically and the objective descends") {
  Rng rng(6);
  const auto pr = sparse_problem(rng, 80, 12, 3, 0.5);
  const auto grid = log_lambda_grid(lambda_max(pr.X, pr.y), 15, 1e-3);
  REQUIRE(grid.size() == 15);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);
  CHECK(grid.back() == doctest::Approx(grid.front() * 1e-3));
  double prev = -1.0;
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    LassoOptions o;
    o.record_objective = true;
    o.tolerance = 1e-12;
    const auto m = fit_lasso(pr.X, pr.y, *it, o);
    const double l1 = m.weights.lpNorm<1>();
    CHECK(l1 >= prev - 1e-9);
    prev = l1;
    for (std::size_t s = 1; s < m.objective_history.size(); ++s) {
      CHECK(m.objective_history[s] <= m.objective_history[s - 1] + 1e-12);
    }
    CHECK(lasso_objective(m, pr.X, pr.y) == doctest::Approx(m.objective_history.back()).epsilon(1e-10));
  }
  CHECK_THROWS_AS(log_lambda_grid(0.0), ValidationError);
  CHECK_THROWS_AS(log_lambda_grid(1.0, 5, 1.0), ValidationError);
}

TEST_CASE("warm start converges to the same solution") {
  Rng rng(8);
  const auto pr = sparse_problem(rng, 60, 10, 4, 0.3);
  const double lam = 0.05 * lambda_max(pr.X, pr.y);
  LassoOptions cold;
  cold.tolerance = 1e-13;
  const auto a = fit_lasso(pr.X, pr.y, lam, cold);
  LassoOptions warm = cold;
  warm.warm_start = Eigen::VectorXd::Constant(10, 0.3);
  const auto b = fit_lasso(pr.X, pr.y, lam, warm);
  CHECK((a.weights - b.weights).norm() <= 1e-9);
}

TEST_CASE("degenerate inputs") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const auto m = fit_lasso(X, y, 0.01);
  CHECK(m.dropped == std::vector<int>{1});
  CHECK(m.weights(1) == 0.0);
  CHECK(m.feature_stds(1) == 0.0);
  CHECK_THROWS_AS(fit_lasso(X.topRows(1), y.head(1), 0.1), ValidationError);
  CHECK_THROWS_AS(fit_lasso(X, y.head(3), 0.1), ValidationError);
  CHECK_THROWS_AS(fit_lasso(X, y, -1.0), ValidationError);
  auto bad = X;
  bad(0, 0) = NAN;
  CHECK_THROWS_AS(fit_lasso(bad, y, 0.1), ValidationError);
}

TEST_CASE("cross-validated lambda selection") {
  Rng rng(12);
  auto pr = sparse_problem(rng, 100, 10, 2, 0.3);
  for (auto& v : pr.y) v = v >= 0.0 ? 1.0 : -1.0;
  const auto grid = log_lambda_grid(lambda_max(pr.X, pr.y), 10, 1e-3);
  const auto a = select_lambda(pr.X, pr.y, grid, 5, 99);
  const auto b = select_lambda(pr.X, pr.y, grid, 5, 99);
  CHECK(a.lambda == b.lambda);
  CHECK(a.cv_error == b.cv_error);
  CHECK(std::find(grid.begin(), grid.end(), a.lambda) != grid.end());
  const auto best = *std::min_element(a.cv_error.begin(), a.cv_error.end());
  CHECK(best <= 0.2);
  // Ties go to the largest lambda with the minimum error.
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (a.cv_error[g] == best) {
      CHECK(a.lambda >= grid[g]);
    }
  }
  CHECK_THROWS_AS(select_lambda(pr.X, pr.y, grid, 1, 0), ValidationError);
  CHECK_THROWS_WITH_AS(select_lambda(pr.X.topRows(3), pr.y.head(3), grid, 5, 0),
                       doctest::Contains("folds"), ValidationError);
  CHECK_THROWS_AS(select_lambda(pr.X, pr.y, {}, 5, 0), ValidationError);

  SUBCASE("constant error picks the largest lambda") {
    Eigen::VectorXd all_pos = Eigen::VectorXd::Ones(100);
    const auto s = select_lambda(pr.X, all_pos, {0.01, 0.5, 0.1}, 5, 1);
    CHECK(s.lambda == 0.5);
  }
}

TEST_CASE("separable single feature prefers the small lambda") {
  Eigen::MatrixXd X(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = (i % 2 ? -1.0 : 1.0) * (1.0 + 0.1 * i);
    y(i) = i % 2 ? -1.0 : 1.0;
  }
  const double top = lambda_max(X, y);
  const auto s = select_lambda(X, y, {0.01, 2.0 * top}, 5, 0);
  CHECK(s.lambda == 0.01);
  CHECK(s.cv_error[0] == 0.0);
  CHECK(s.cv_error[1] >= 0.4);
}

TEST_CASE("lambda = 0 on a small well-conditioned problem") {
  Rng rng(31);
  const auto pr = sparse_problem(rng, 20, 5, 5, 0.1);
  const auto m = fit_lasso(pr.X, pr.y, 0.0);
  Eigen::MatrixXd A(20, 6);
  A << pr.X, Eigen::VectorXd::Ones(20);
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(pr.y);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(m.weights(j) / m.feature_stds(j) - beta(j)) <= 1e-6);
  CHECK(std::abs(m.intercept - m.feature_means.dot(m.weights.cwiseQuotient(m.feature_stds)) - beta(5)) <= 1e-6);
}

TEST_CASE("property: support recovery") {
  // N = 200, 20 features, 3 active, low noise: the cross-validated fit keeps
  // every true feature in at least 90% of seeds.
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(1000 + seed);
    const auto pr = sparse_problem(rng, 200, 20, 3, 0.2);
    const auto grid = log_lambda_grid(lambda_max(pr.X, pr.y), 10, 1e-3);
    const auto sel = select_lambda(pr.X, pr.y, grid, 5, seed);
    const auto m = fit_lasso(pr.X, pr.y, sel.lambda);
    bool ok = true;
    for (int j = 0; j < 3; ++j) ok = ok && m.weights(j) != 0.0;
    recovered += ok;
  }
  CHECK(recovered >= 45);
}
