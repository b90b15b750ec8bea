#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexifactor/backend.hpp"

namespace lexifactor {

// Planted model for the offline backend.
//
// The logit vector at a position is looked up in this order:
//   1. context_logits[context_key(prompt, prefix)]
//   2. default_logits
//   3. pseudo-random logits derived from (seed, prompt, prefix)
// where `prefix` is the part of the continuation already scored.
// Logits for one context: listed tokens take their value, every other
// vocabulary token takes `rest`.
struct SparseLogits {
  std::map<std::string, double> listed;
  double rest = 0.0;

  bool operator==(const SparseLogits&) const = default;
};

struct MockSpec {
  std::string model = "mock";
  std::vector<std::string> vocabulary;
  // Exact continuation -> token list. Anything absent falls back to greedy
  // longest match over the vocabulary.
  std::map<std::string, std::vector<std::string>> tokenizer;
  std::optional<std::vector<double>> default_logits;
  std::map<std::string, SparseLogits> context_logits;
};

std::string context_key(const std::string& prompt, const std::string& prefix);

nlohmann::json to_json(const MockSpec& spec);
MockSpec mock_spec_from_json(const nlohmann::json& j);

// log(softmax(logits / temperature)), computed stably.
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

class MockBackend final : public Backend {
 public:
  MockBackend(MockSpec spec, std::uint64_t seed);

  ScoreResponse score(const ScoreRequest& request) override;
  BackendCapabilities capabilities() const override { return {true}; }
  std::string model_id() const override { return spec_.model; }

  std::vector<std::string> tokenize(const std::string& continuation) const;
  std::vector<double> logits_at(const std::string& prompt, const std::string& prefix) const;
  const MockSpec& spec() const { return spec_; }

 private:
  MockSpec spec_;
  std::uint64_t seed_;
  std::map<std::string, std::size_t, std::less<>> vocab_index_;
};

}  // namespace lexifactor
