#pragma once

#include <functional>
#include <memory>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "lexifactor/backend.hpp"

namespace lexifactor {

struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key_env = "LEXIFACTOR_API_KEY";
  int top_k = 20;
  // Set only for servers that return the whole vocabulary as alternatives.
  bool full_vocabulary = false;
  int max_attempts = 3;
  double backoff_base_seconds = 1.0;
  double backoff_factor = 2.0;
  int max_in_flight = 4;
  double timeout_seconds = 120.0;
};

// Request body for teacher-forced scoring: the prompt and continuation are
// sent together with echo=true and max_tokens=0.
nlohmann::json build_completion_body(const RemoteConfig& config, const ScoreRequest& request);

// Extracts the continuation tokens from an echoed completions response.
// The split point is the byte length of the prompt; a token that straddles
// it is an error.
ScoreResponse parse_completion_response(const nlohmann::json& body,
                                        const ScoreRequest& request,
                                        bool full_vocabulary);

class RemoteBackend final : public Backend {
 public:
  using Sleeper = std::function<void(double seconds)>;

  explicit RemoteBackend(RemoteConfig config, Sleeper sleeper = {});

  ScoreResponse score(const ScoreRequest& request) override;
  BackendCapabilities capabilities() const override { return {config_.full_vocabulary}; }
  std::string model_id() const override { return config_.model; }

 private:
  RemoteConfig config_;
  Sleeper sleep_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

}  // namespace lexifactor
