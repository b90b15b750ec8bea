#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lexifactor {

struct RunConfig {
  std::string dataset;
  std::string lexicon;  // bundled list when empty
  std::string backend = "mock";  // "mock" or "remote"
  std::string endpoint = "http://127.0.0.1:8000";
  std::string mock_spec;
  std::string model;
  std::string api_key_env = "LEXIFACTOR_API_KEY";
  std::string prompt_template;  // file; built-in prompt when empty
  double temperature = 1.0;
  std::optional<double> target_temperature;
  bool leading_space = false;
  bool full_vocabulary = false;
  int top_k = 20;
  int concurrency = 4;
  std::string cache;
  std::string matrix;
  int k = 5;
  int top_m = 10;
  std::uint64_t seed = 0;
  double test_fraction = 0.4;
  std::string lambda_grid = "log:20:1e-4";  // log:<points>:<low/high ratio>
  int folds = 5;
  std::string calibration = "train";
  std::string output_dir = "out";
  // synth
  std::size_t stories = 208;
  double mu = 2.0;
  std::optional<double> noise_sigma;
  double explained_variance = 0.74;
};

// Fields use the same names as the struct. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

struct LambdaGrid {
  int points = 20;
  double ratio = 1e-4;
};
LambdaGrid parse_lambda_grid(const std::string& descriptor);

// Range checks shared by every subcommand.
void validate(const RunConfig& config);

// Entry point behind the executable. Returns 0 on success, 1 on runtime
// failure, 2 on usage or validation errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lexifactor
