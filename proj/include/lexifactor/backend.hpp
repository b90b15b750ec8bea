#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexifactor/error.hpp"

namespace lexifactor {

struct TokenLogProb {
  std::string token;
  double logprob = 0.0;  // natural log
  // Distribution at this position: full vocabulary when `complete`, top-k
  // otherwise.
  std::optional<std::map<std::string, double>> alternatives;
  bool complete = false;

  bool operator==(const TokenLogProb&) const = default;
};

struct ScoreRequest {
  std::string prompt;
  std::string continuation;
  std::string model;
  double temperature = 1.0;
  bool want_alternatives = false;
};

struct ScoreResponse {
  std::vector<TokenLogProb> tokens;
  std::string model;

  bool operator==(const ScoreResponse&) const = default;
};

// Throws ValidationError for an empty continuation or a temperature that is
// not finite and positive.
void validate(const ScoreRequest& request);

struct BackendCapabilities {
  bool full_vocabulary = false;
};

class BackendError : public RuntimeError {
 public:
  enum class Kind {
    kTransport,       // retries exhausted
    kModelNotFound,
    kRefused,         // 4xx, or no echo/teacher-forced scoring
    kTokenization,    // continuation boundary or coverage mismatch
    kUnknownSymbol,   // mock vocabulary miss
  };
  BackendError(Kind kind, const std::string& what) : RuntimeError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Teacher-forced scoring of a fixed continuation. Implementations must be
// safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ScoreResponse score(const ScoreRequest& request) = 0;
  virtual BackendCapabilities capabilities() const = 0;
  // Stable identifier recorded in provenance and cache keys.
  virtual std::string model_id() const = 0;
};

// Joined token texts must equal the continuation byte-for-byte.
void check_coverage(const ScoreResponse& response, const std::string& continuation);

}  // namespace lexifactor
