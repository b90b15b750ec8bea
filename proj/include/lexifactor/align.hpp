#pragma once

#include <array>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "lexifactor/corpus.hpp"
#include "lexifactor/factor.hpp"

namespace lexifactor {

struct AccuracyMatrix {
  // P(i, j) = max(a, 1 - a), where a is the fraction of stories whose sign
  // of U(:, i) matches trait j's label (1 -> +, 0 -> -; sign(0) = +).
  Eigen::MatrixXd P;
  Eigen::MatrixXd raw;  // the unoriented fractions a
};

AccuracyMatrix accuracy_matrix(const Eigen::MatrixXd& U, const Eigen::MatrixXi& labels);

struct TraitAlignment {
  std::array<BigFiveTrait, kNumTraits> assignment{};  // component -> trait
  std::array<int, kNumTraits> orientation{1, 1, 1, 1, 1};
  std::string source;            // calibration label set identifier
  std::string mode = "full";     // "train" or "full"
  AccuracyMatrix accuracy;

  // Component matched to trait t.
  int component_for(BigFiveTrait t) const;
};

// Exhaustive search over all 120 component -> trait bijections, keeping the
// lexicographically smallest permutation among equal sums.
TraitAlignment assign_components(const AccuracyMatrix& accuracy);

// N x 5, trait-ordered: column t = orientation[i] * U(:, i) with
// assignment[i] = t.
Eigen::MatrixXd apply_alignment(const Eigen::MatrixXd& U, const TraitAlignment& alignment);
Eigen::MatrixXd apply_alignment(const FactorDecomposition& decomp, const TraitAlignment& alignment);

// Experimental, label-free: orient each component so the (+)-pole
// adjectives of its matched trait have positive mean loading.
TraitAlignment orient_by_poles(const TraitAlignment& alignment, const FactorDecomposition& decomp,
                               const Lexicon& lexicon);

nlohmann::json to_json(const TraitAlignment& alignment);
TraitAlignment alignment_from_json(const nlohmann::json& j);

// Markdown grid with the matched entry of each row in bold.
std::string render_accuracy_grid(const TraitAlignment& alignment);

}  // namespace lexifactor
