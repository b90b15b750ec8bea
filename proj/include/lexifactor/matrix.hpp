#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace lexifactor {

struct Provenance {
  std::string model;
  double temperature = 1.0;
  std::string prompt_hash;
  bool leading_space = false;
  std::string corpus_hash;
  std::string lexicon_hash;
  // Centering is per column (per adjective).
  std::string centering_axis = "column";
};

// Stories x adjectives matrix of summed log-probabilities. Rows follow
// corpus order, columns follow lexicon order.
class ObservationMatrix {
 public:
  ObservationMatrix() = default;
  ObservationMatrix(Eigen::MatrixXd values, std::vector<std::string> row_ids,
                    std::vector<std::string> column_words, Provenance provenance = {},
                    std::optional<Eigen::VectorXd> column_means = std::nullopt);

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& column_words() const { return column_words_; }
  const Provenance& provenance() const { return provenance_; }
  const std::optional<Eigen::VectorXd>& column_means() const { return column_means_; }
  bool centered() const { return column_means_.has_value(); }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  // Rows selected by id, in the given order.
  ObservationMatrix select_rows(const std::vector<std::string>& ids) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> row_ids_;
  std::vector<std::string> column_words_;
  Provenance provenance_;
  std::optional<Eigen::VectorXd> column_means_;
};

// Tab-separated: header `id<TAB>word...`, then `story_id<TAB>value...` with
// 17 significant digits.
std::string format_matrix_table(const ObservationMatrix& m);
// Sidecar record: provenance, centered flag, column means, and the hash of
// the table text.
nlohmann::json matrix_sidecar(const ObservationMatrix& m);

std::string sidecar_path(const std::string& matrix_path);
void write_matrix(const ObservationMatrix& m, const std::string& path);
// Reads the table and, when present, its sidecar. Refuses a sidecar whose
// table hash does not match.
ObservationMatrix read_matrix(const std::string& path);
ObservationMatrix parse_matrix(const std::string& table_text,
                               const std::optional<nlohmann::json>& sidecar);

// Digest of the table text; the identity of a matrix in downstream records.
std::string matrix_hash(const ObservationMatrix& m);

std::string format_double(double v);

}  // namespace lexifactor
