#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lexifactor/corpus.hpp"
#include "lexifactor/matrix.hpp"
#include "lexifactor/svd.hpp"

namespace lexifactor {

struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // sample, N - 1 denominator
};

ColumnStats column_stats(const ObservationMatrix& X);

// Pearson correlations between adjective columns.
Eigen::MatrixXd correlation_matrix(const ObservationMatrix& X);

// Subtracts each column's mean and records it. Refuses a matrix that is
// already centered.
ObservationMatrix zero_center(const ObservationMatrix& X);
// Raw column centering with no guard; returns the removed means.
Eigen::VectorXd center_columns(Eigen::MatrixXd& values);

struct ExplainedVariance {
  Eigen::VectorXd ratios;
  Eigen::VectorXd cumulative;
};

ExplainedVariance explained_variance(const Eigen::VectorXd& singular_values);

struct FactorDecomposition {
  Eigen::MatrixXd U;  // N x k factor matrix
  Eigen::VectorXd S;  // k singular values
  Eigen::MatrixXd V;  // D x k loading matrix
  int k = 0;
  Eigen::VectorXd singular_values;  // all min(N, D)
  ExplainedVariance explained;      // over the full spectrum
  std::vector<std::string> row_ids;
  std::vector<std::string> column_words;
  Eigen::VectorXd column_means;  // centering constants of the source
  std::string source_hash;       // matrix_hash of the centered input
};

FactorDecomposition svd(const ObservationMatrix& centered, int k,
                        const JacobiOptions& options = {});

// Factor coordinates of new uncentered rows: (X - means) V S^-1.
Eigen::MatrixXd project_rows(const FactorDecomposition& decomp, const Eigen::MatrixXd& rows);

struct LoadingEntry {
  std::string word;
  BigFiveTrait trait;
  Pole pole;
  double loading;
};

struct LoadingSlice {
  int component = 0;
  std::vector<LoadingEntry> top;     // descending
  std::vector<LoadingEntry> bottom;  // ascending
};

LoadingSlice top_loadings(const FactorDecomposition& decomp, int component, int m,
                          const Lexicon& lexicon);

nlohmann::json to_json(const FactorDecomposition& decomp);
FactorDecomposition decomposition_from_json(const nlohmann::json& j);

// component<TAB>singular_value<TAB>ratio<TAB>cumulative, 1-based components.
std::string format_scree_table(const FactorDecomposition& decomp);
// Bar chart of singular values with the cumulative ratio as a line.
std::string render_scree_svg(const FactorDecomposition& decomp);
// Top/bottom-m loading tables for every retained component (markdown).
std::string render_loading_tables(const FactorDecomposition& decomp, int m,
                                  const Lexicon& lexicon);

}  // namespace lexifactor
