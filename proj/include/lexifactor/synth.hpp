#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lexifactor/corpus.hpp"
#include "lexifactor/matrix.hpp"
#include "lexifactor/mock_backend.hpp"
#include "lexifactor/probe.hpp"

namespace lexifactor {

struct SynthOptions {
  // Component c carries trait component_traits[c] with strength
  // base_scale * scale_ratio^c; distinct strengths keep the components
  // identifiable individually.
  double base_scale = 2.0;
  double scale_ratio = 0.8;
  std::array<BigFiveTrait, kNumTraits> component_traits = {
      BigFiveTrait::kExtraversion, BigFiveTrait::kOpenness, BigFiveTrait::kAgreeableness,
      BigFiveTrait::kNeuroticism, BigFiveTrait::kConscientiousness};
  double bias_low = -20.0;
  double bias_high = -6.0;
  // Off-trait loading magnitude relative to on-trait ones; 0 keeps each
  // component supported on its own adjectives only.
  double cross_loading = 0.0;
};

struct PlantedModel {
  Eigen::MatrixXd loadings;       // D x 5, orthonormal columns, component order
  Eigen::MatrixXd factor_scores;  // N x 5, component order
  Eigen::VectorXd frequency_bias; // D
  Eigen::VectorXd scales;         // 5, component order
  std::array<BigFiveTrait, kNumTraits> component_traits{};
  double mu = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double cross_loading = 0.0;

  // Component index carrying trait t.
  int component_of(BigFiveTrait t) const;
};

struct SyntheticBundle {
  ObservationMatrix matrix;
  Corpus corpus;
  PlantedModel truth;
};

// Matrix = bias + scores * diag(scales) * loadings^T + noise_sigma * Z.
// Labels cycle through seeded permutations of the 32 patterns.
SyntheticBundle generate(std::size_t n, const Lexicon& lexicon, double mu, double noise_sigma,
                         std::uint64_t seed, const SynthOptions& options = {});

// Noise level at which the top-5 share of centered variance is about
// `target` (signal energy plus five noise directions over the total).
double noise_for_explained_variance(std::size_t n, std::size_t d, double mu,
                                    const Eigen::VectorXd& scales, double target);

// Analytic sign accuracy per trait, canonical order: Phi(mu a / sqrt(a^2 + sigma^2)).
std::array<double, kNumTraits> predicted_accuracy(const PlantedModel& truth);

// Same rows (by id) and columns (by word), truth rows restricted to match.
SyntheticBundle select(const SyntheticBundle& bundle, const std::vector<std::string>& ids,
                       const std::vector<std::string>& words);

// Up to four near-equal chunks; longer chunks first.
std::vector<std::string> toy_tokenize(const std::string& word);

inline constexpr std::string_view kFillerToken = "<other>";

// Mock spec whose conditional logits reproduce every matrix cell when the
// bundle's corpus is probed at temperature 1 with `tmpl`.
MockSpec to_mock_spec(const SyntheticBundle& bundle, const Lexicon& lexicon,
                      const PromptTemplate& tmpl = PromptTemplate::default_template(),
                      bool leading_space = false);

nlohmann::json to_json(const PlantedModel& truth, const std::vector<std::string>& words);
PlantedModel planted_model_from_json(const nlohmann::json& j);

// Writes corpus.jsonl, matrix.tsv (+ sidecar) and truth.json under `dir`.
void write_bundle(const SyntheticBundle& bundle, const std::string& dir);

}  // namespace lexifactor
