#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lexifactor/align.hpp"
#include "lexifactor/corpus.hpp"
#include "lexifactor/factor.hpp"
#include "lexifactor/lasso.hpp"
#include "lexifactor/matrix.hpp"

namespace lexifactor {

struct SplitPlan {
  std::uint64_t seed = 0;
  double test_fraction = 0.4;
  std::vector<std::string> train_ids;  // corpus order
  std::vector<std::string> test_ids;   // corpus order
  std::string method;
  std::vector<std::string> warnings;
};

// Stratified by the 5-bit label pattern. Test size is ceil(N * fraction);
// each pattern contributes floor(count * fraction) and the remainder is
// handed out one per pattern in seeded order.
SplitPlan split(const Corpus& corpus, std::uint64_t seed, double test_fraction);

// 1 where the oriented factor value is >= 0.
Eigen::MatrixXi predict_by_sign(const Eigen::MatrixXd& oriented_factors);

struct TraitReport {
  std::string method;
  std::string model;
  std::array<double, kNumTraits> accuracy{};
  double average = 0.0;
  std::size_t test_count = 0;
};

TraitReport make_report(std::string method, std::string model,
                        const std::array<double, kNumTraits>& accuracy, std::size_t test_count);

// Predictions and labels are matched by story id; both id lists must cover
// the same stories.
TraitReport evaluate(const std::vector<std::string>& prediction_ids,
                     const Eigen::MatrixXi& predictions,
                     const std::vector<std::string>& label_ids, const Eigen::MatrixXi& labels,
                     std::string method = {}, std::string model = {});

nlohmann::json to_json(const TraitReport& report);
TraitReport trait_report_from_json(const nlohmann::json& j);
// Method x trait accuracy table with the average column, 3 decimals.
std::string render_report_table(const std::vector<TraitReport>& rows);

struct AssessOptions {
  std::uint64_t seed = 0;
  double test_fraction = 0.4;
  int folds = 5;
  int grid_points = 20;
  double grid_ratio = 1e-4;
  // "train": calibrate on the training split, score the test split.
  // "full": calibrate and score on every story.
  std::string calibration = "train";
  bool orient_by_poles = false;  // experimental
};

struct AssessmentResult {
  SplitPlan plan;
  FactorDecomposition decomposition;
  TraitAlignment alignment;
  std::array<LassoModel, kNumTraits> lasso;
  std::array<LambdaSelection, kNumTraits> lambda_selection;
  TraitReport svd_report;
  TraitReport lasso_report;
};

AssessmentResult run_assessment(const ObservationMatrix& raw, const Corpus& corpus,
                                const Lexicon& lexicon, const AssessOptions& options = {});

}  // namespace lexifactor
