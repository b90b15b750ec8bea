#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lexifactor/corpus.hpp"

namespace lexifactor {

struct LassoOptions {
  double tolerance = 1e-9;  // max |w_new - w_old| over a sweep
  long max_sweeps = 100000;
  std::optional<Eigen::VectorXd> warm_start;  // standardized-scale weights
  bool record_objective = false;
};

struct LassoModel {
  Eigen::VectorXd weights;  // standardized scale
  double intercept = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_stds;  // population (N) std; 0 for dropped features
  std::vector<int> dropped;      // zero-variance features, weight fixed at 0
  std::optional<BigFiveTrait> trait;
  long sweeps = 0;
  bool converged = false;
  std::vector<double> objective_history;  // per sweep, when recorded

  // Standardizes rows with the stored parameters.
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd decision(const Eigen::MatrixXd& X) const;
  // 1 where decision >= 0, else 0.
  Eigen::VectorXi predict(const Eigen::MatrixXd& X) const;
};

// Minimizes (1/2N)||y - Zw - b||^2 + lambda ||w||_1 over standardized
// features Z by cyclic coordinate descent with soft-thresholding. The
// intercept is unpenalized.
LassoModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     const LassoOptions& options = {});

double soft_threshold(double z, double gamma);

// Smallest lambda with an all-zero solution: max_j |z_j^T (y - mean y)| / N.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// `points` values spaced evenly in log between ratio * top and top.
std::vector<double> log_lambda_grid(double top, int points = 20, double ratio = 1e-4);

double lasso_objective(const LassoModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> grid;             // as given
  std::vector<double> cv_error;         // misclassification rate per grid point
};

// k-fold cross-validated misclassification (sign of the decision vs sign of
// y). Ties go to the larger lambda.
LambdaSelection select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const std::vector<double>& grid, int folds, std::uint64_t seed);

nlohmann::json to_json(const LassoModel& model, const std::vector<std::string>& words);

}  // namespace lexifactor
