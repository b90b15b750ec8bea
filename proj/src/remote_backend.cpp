#include "lexifactor/remote_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace lexifactor {

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

std::string error_excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

nlohmann::json build_completion_body(const RemoteConfig& config, const ScoreRequest& request) {
  nlohmann::json body;
  body["model"] = request.model.empty() ? config.model : request.model;
  body["prompt"] = request.prompt + request.continuation;
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["logprobs"] = request.want_alternatives ? config.top_k : 1;
  body["temperature"] = request.temperature;
  return body;
}

ScoreResponse parse_completion_response(const nlohmann::json& body,
                                        const ScoreRequest& request,
                                        bool full_vocabulary) {
  using Kind = BackendError::Kind;
  const nlohmann::json* logprobs = nullptr;
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const auto& choice = body["choices"][0];
    if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
      logprobs = &choice["logprobs"];
    }
  }
  if (logprobs == nullptr || !logprobs->contains("tokens") ||
      !logprobs->contains("token_logprobs")) {
    throw BackendError(Kind::kRefused, "backend returned no echoed token logprobs");
  }
  const auto& tokens = (*logprobs)["tokens"];
  const auto& token_lps = (*logprobs)["token_logprobs"];
  const nlohmann::json* top = nullptr;
  if (logprobs->contains("top_logprobs") && (*logprobs)["top_logprobs"].is_array()) {
    top = &(*logprobs)["top_logprobs"];
  }
  if (!tokens.is_array() || !token_lps.is_array() || tokens.size() != token_lps.size()) {
    throw BackendError(Kind::kRefused, "malformed logprobs block");
  }

  const std::size_t boundary = request.prompt.size();
  ScoreResponse response;
  response.model = body.value("model", request.model);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto text = tokens[i].get<std::string>();
    const std::size_t begin = offset;
    const std::size_t end = offset + text.size();
    offset = end;
    if (end <= boundary) continue;
    if (begin < boundary) {
      throw BackendError(Kind::kTokenization,
                         "token '" + text + "' straddles the prompt/continuation boundary");
    }
    if (token_lps[i].is_null()) {
      throw BackendError(Kind::kRefused, "missing logprob for continuation token '" + text + "'");
    }
    TokenLogProb t;
    t.token = text;
    t.logprob = token_lps[i].get<double>();
    if (request.want_alternatives && top != nullptr && i < top->size() &&
        (*top)[i].is_object()) {
      std::map<std::string, double> alternatives;
      for (const auto& [tok, lp] : (*top)[i].items()) alternatives.emplace(tok, lp.get<double>());
      t.alternatives = std::move(alternatives);
      t.complete = full_vocabulary;
    }
    response.tokens.push_back(std::move(t));
  }
  if (offset != boundary + request.continuation.size()) {
    throw BackendError(Kind::kTokenization, "echoed tokens do not reproduce prompt + continuation");
  }
  check_coverage(response, request.continuation);
  return response;
}

RemoteBackend::RemoteBackend(RemoteConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleep_(std::move(sleeper)) {
  if (config_.model.empty()) throw ValidationError("remote backend: model id required");
  if (config_.max_attempts < 1) throw ValidationError("remote backend: max_attempts < 1");
  if (config_.max_in_flight < 1 || config_.max_in_flight > 1024) {
    throw ValidationError("remote backend: max_in_flight must be in [1, 1024]");
  }
  if (!sleep_) {
    sleep_ = [](double seconds) {
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
  }
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

ScoreResponse RemoteBackend::score(const ScoreRequest& request) {
  using Kind = BackendError::Kind;
  validate(request);
  SemaphoreGuard guard(*in_flight_);

  const auto body = build_completion_body(config_, request).dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  double delay = config_.backoff_base_seconds;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + error_excerpt(res->body);
    } else if (res->status == 404) {
      throw BackendError(Kind::kModelNotFound,
                         "model '" + config_.model + "' not found (HTTP 404): " +
                             error_excerpt(res->body));
    } else if (res->status >= 400) {
      throw BackendError(Kind::kRefused, "HTTP " + std::to_string(res->status) + ": " +
                                             error_excerpt(res->body));
    } else {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(Kind::kRefused, std::string("unparseable response body: ") + e.what());
      }
      return parse_completion_response(parsed, request, config_.full_vocabulary);
    }
    if (attempt < config_.max_attempts) {
      sleep_(delay);
      delay *= config_.backoff_factor;
    }
  }
  throw BackendError(Kind::kTransport, "giving up after " + std::to_string(config_.max_attempts) +
                                           " attempts; last error: " + last_error);
}

}  // namespace lexifactor
