#include "lexifactor/backend.hpp"

#include <cmath>

namespace lexifactor {

void validate(const ScoreRequest& request) {
  if (request.continuation.empty()) {
    throw ValidationError("score request: continuation must be nonempty");
  }
  if (!std::isfinite(request.temperature) || request.temperature <= 0.0) {
    throw ValidationError("score request: temperature must be finite and positive");
  }
}

void check_coverage(const ScoreResponse& response, const std::string& continuation) {
  std::string joined;
  for (const auto& t : response.tokens) joined += t.token;
  if (joined != continuation) {
    throw BackendError(BackendError::Kind::kTokenization,
                       "token texts '" + joined + "' do not cover continuation '" +
                           continuation + "'");
  }
}

}  // namespace lexifactor
