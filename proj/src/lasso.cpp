#include "lexifactor/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lexifactor/error.hpp"
#include "lexifactor/rng.hpp"

namespace lexifactor {

namespace {

struct Standardized {
  Eigen::MatrixXd Z;
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  std::vector<int> dropped;
};

Standardized standardize_fit(const Eigen::MatrixXd& X) {
  Standardized s;
  const auto n = static_cast<double>(X.rows());
  s.means = X.colwise().mean().transpose();
  s.stds.resize(X.cols());
  s.Z = X.rowwise() - s.means.transpose();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(s.Z.col(j).squaredNorm() / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(s.means(j))))) {
      s.stds(j) = 0.0;
      s.Z.col(j).setZero();
      s.dropped.push_back(static_cast<int>(j));
    } else {
      s.stds(j) = sd;
      s.Z.col(j) /= sd;
    }
  }
  return s;
}

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() < 2) throw ValidationError("lasso needs at least 2 samples");
  if (y.size() != X.rows()) throw ValidationError("lasso: X and y disagree on sample count");
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("lasso: non-finite input");
}

}  // namespace

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

Eigen::MatrixXd LassoModel::standardize(const Eigen::MatrixXd& X) const {
  if (X.cols() != weights.size()) throw ValidationError("lasso model: feature count mismatch");
  Eigen::MatrixXd Z = X.rowwise() - feature_means.transpose();
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    if (feature_stds(j) > 0.0) {
      Z.col(j) /= feature_stds(j);
    } else {
      Z.col(j).setZero();
    }
  }
  return Z;
}

Eigen::VectorXd LassoModel::decision(const Eigen::MatrixXd& X) const {
  return (standardize(X) * weights).array() + intercept;
}

Eigen::VectorXi LassoModel::predict(const Eigen::MatrixXd& X) const {
  const auto d = decision(X);
  Eigen::VectorXi out(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) out(i) = d(i) >= 0.0 ? 1 : 0;
  return out;
}

double lasso_objective(const LassoModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::VectorXd r = y - model.decision(X);
  return r.squaredNorm() / (2.0 * static_cast<double>(X.rows())) +
         model.lambda * model.weights.lpNorm<1>();
}

LassoModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     const LassoOptions& options) {
  check_inputs(X, y);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lasso: lambda must be finite and >= 0");
  }
  const auto n = static_cast<double>(X.rows());
  const auto p = X.cols();
  auto s = standardize_fit(X);

  LassoModel m;
  m.lambda = lambda;
  m.feature_means = s.means;
  m.feature_stds = s.stds;
  m.dropped = s.dropped;
  m.intercept = y.mean();
  m.weights = Eigen::VectorXd::Zero(p);
  if (options.warm_start) {
    if (options.warm_start->size() != p) throw ValidationError("lasso: warm start size mismatch");
    m.weights = *options.warm_start;
    for (int j : s.dropped) m.weights(j) = 0.0;
  }

  Eigen::VectorXd curvature(p);
  for (Eigen::Index j = 0; j < p; ++j) curvature(j) = s.Z.col(j).squaredNorm() / n;

  Eigen::VectorXd residual = (y.array() - m.intercept).matrix() - s.Z * m.weights;
  auto objective = [&] {
    return residual.squaredNorm() / (2.0 * n) + lambda * m.weights.lpNorm<1>();
  };
  if (options.record_objective) m.objective_history.push_back(objective());

  while (m.sweeps < options.max_sweeps) {
    ++m.sweeps;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (curvature(j) == 0.0) continue;
      const double old = m.weights(j);
      const double rho = s.Z.col(j).dot(residual) / n + curvature(j) * old;
      const double updated = soft_threshold(rho, lambda) / curvature(j);
      if (updated != old) {
        residual -= (updated - old) * s.Z.col(j);
        m.weights(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (options.record_objective) m.objective_history.push_back(objective());
    if (max_change < options.tolerance) {
      m.converged = true;
      break;
    }
  }
  return m;
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_inputs(X, y);
  const auto s = standardize_fit(X);
  const Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
  // Same arithmetic as the first coordinate update, so every weight is
  // exactly zero at this lambda.
  double top = 0.0;
  for (Eigen::Index j = 0; j < s.Z.cols(); ++j) {
    top = std::max(top, std::abs(s.Z.col(j).dot(yc) / static_cast<double>(X.rows())));
  }
  return top;
}

std::vector<double> log_lambda_grid(double top, int points, double ratio) {
  if (!(top > 0.0) || points < 1 || !(ratio > 0.0) || ratio >= 1.0) {
    throw ValidationError("lambda grid: need top > 0, points >= 1, ratio in (0, 1)");
  }
  std::vector<double> grid(static_cast<std::size_t>(points));
  if (points == 1) {
    grid[0] = top;
    return grid;
  }
  const double lo = std::log(top * ratio);
  const double hi = std::log(top);
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(hi - (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  grid.front() = top;
  return grid;
}

LambdaSelection select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const std::vector<double>& grid, int folds, std::uint64_t seed) {
  check_inputs(X, y);
  if (grid.empty()) throw ValidationError("select_lambda: empty lambda grid");
  if (folds < 2) throw ValidationError("select_lambda: need at least 2 folds");
  const auto n = X.rows();
  if (folds > n) {
    throw ValidationError("select_lambda: " + std::to_string(folds) +
                          " folds leave a fold with fewer than 1 sample (N = " +
                          std::to_string(n) + ")");
  }
  for (double l : grid) {
    if (!(l >= 0.0)) throw ValidationError("select_lambda: negative lambda in grid");
  }

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < perm.size(); ++k) {
    fold_of[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }

  // Descending lambda path per fold with warm starts.
  std::vector<std::size_t> path(grid.size());
  std::iota(path.begin(), path.end(), std::size_t{0});
  std::stable_sort(path.begin(), path.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  std::vector<double> errors(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    if (train.size() < 2) throw ValidationError("select_lambda: training fold has < 2 samples");
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), X.cols());
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      Xtr.row(static_cast<Eigen::Index>(r)) = X.row(train[r]);
      ytr(static_cast<Eigen::Index>(r)) = y(train[r]);
    }
    Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), X.cols());
    for (std::size_t r = 0; r < test.size(); ++r) Xte.row(static_cast<Eigen::Index>(r)) = X.row(test[r]);

    LassoOptions opts;
    for (auto g : path) {
      auto model = fit_lasso(Xtr, ytr, grid[g], opts);
      opts.warm_start = model.weights;
      const auto d = model.decision(Xte);
      Eigen::Index wrong = 0;
      for (std::size_t r = 0; r < test.size(); ++r) {
        wrong += (d(static_cast<Eigen::Index>(r)) >= 0.0) != (y(test[r]) >= 0.0);
      }
      errors[g] += static_cast<double>(wrong);
    }
  }

  LambdaSelection sel;
  sel.grid = grid;
  sel.cv_error.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) sel.cv_error[g] = errors[g] / static_cast<double>(n);
  std::size_t best = path.front();
  for (auto g : path) {
    if (sel.cv_error[g] < sel.cv_error[best]) best = g;
  }
  sel.lambda = grid[best];
  return sel;
}

nlohmann::json to_json(const LassoModel& m, const std::vector<std::string>& words) {
  nlohmann::ordered_json j;
  j["trait"] = m.trait ? std::string(trait_name(*m.trait)) : std::string();
  j["lambda"] = m.lambda;
  j["intercept"] = m.intercept;
  j["feature_means"] = std::vector<double>(m.feature_means.data(),
                                           m.feature_means.data() + m.feature_means.size());
  j["feature_stds"] = std::vector<double>(m.feature_stds.data(),
                                          m.feature_stds.data() + m.feature_stds.size());
  auto nz = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) {
    if (m.weights(i) != 0.0) {
      const auto name = static_cast<std::size_t>(i) < words.size()
                            ? words[static_cast<std::size_t>(i)]
                            : std::to_string(i);
      nz.push_back({name, m.weights(i)});
    }
  }
  j["weights"] = nz;
  j["converged"] = m.converged;
  j["sweeps"] = m.sweeps;
  return nlohmann::json(j);
}

}  // namespace lexifactor
