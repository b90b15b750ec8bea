#include "lexifactor/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lexifactor/hash.hpp"

namespace lexifactor {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string context_key(const std::string& prompt, const std::string& prefix) {
  return sha256_hex(prompt) + ":" + prefix;
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double peak = -std::numeric_limits<double>::infinity();
  for (double l : logits) peak = std::max(peak, l / temperature);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l / temperature - peak);
  const double lse = peak + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] / temperature - lse;
  return out;
}

nlohmann::json to_json(const MockSpec& spec) {
  nlohmann::json j;
  j["model"] = spec.model;
  j["vocabulary"] = spec.vocabulary;
  j["tokenizer"] = spec.tokenizer;
  if (spec.default_logits) j["default_logits"] = *spec.default_logits;
  nlohmann::json ctx = nlohmann::json::object();
  for (const auto& [key, sparse] : spec.context_logits) {
    ctx[key] = {{"listed", sparse.listed}, {"rest", sparse.rest}};
  }
  j["context_logits"] = ctx;
  return j;
}

MockSpec mock_spec_from_json(const nlohmann::json& j) {
  MockSpec spec;
  try {
    spec.model = j.value("model", std::string("mock"));
    spec.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    if (j.contains("tokenizer")) {
      spec.tokenizer = j.at("tokenizer").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (j.contains("default_logits") && !j.at("default_logits").is_null()) {
      spec.default_logits = j.at("default_logits").get<std::vector<double>>();
    }
    if (j.contains("context_logits")) {
      for (const auto& [key, value] : j.at("context_logits").items()) {
        SparseLogits sparse;
        if (value.is_array()) {
          // Dense form: one logit per vocabulary token.
          const auto dense = value.get<std::vector<double>>();
          if (dense.size() != spec.vocabulary.size()) {
            throw ValidationError("mock spec: context logits length mismatch for " + key);
          }
          for (std::size_t i = 0; i < dense.size(); ++i) sparse.listed[spec.vocabulary[i]] = dense[i];
        } else {
          sparse.listed = value.at("listed").get<std::map<std::string, double>>();
          sparse.rest = value.value("rest", 0.0);
        }
        spec.context_logits.emplace(key, std::move(sparse));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed mock spec: ") + e.what());
  }
  return spec;
}

MockBackend::MockBackend(MockSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  if (spec_.vocabulary.empty()) throw ValidationError("mock spec: empty vocabulary");
  for (std::size_t i = 0; i < spec_.vocabulary.size(); ++i) {
    if (spec_.vocabulary[i].empty()) throw ValidationError("mock spec: empty token");
    if (!vocab_index_.emplace(spec_.vocabulary[i], i).second) {
      throw ValidationError("mock spec: duplicate token '" + spec_.vocabulary[i] + "'");
    }
  }
  const auto n = spec_.vocabulary.size();
  if (spec_.default_logits && spec_.default_logits->size() != n) {
    throw ValidationError("mock spec: default_logits length != vocabulary size");
  }
  for (const auto& [key, sparse] : spec_.context_logits) {
    for (const auto& [token, value] : sparse.listed) {
      if (!vocab_index_.count(token)) {
        throw ValidationError("mock spec: context " + key + " lists unknown token '" + token + "'");
      }
      if (!std::isfinite(value)) throw ValidationError("mock spec: non-finite logit in " + key);
    }
    if (!std::isfinite(sparse.rest)) throw ValidationError("mock spec: non-finite logit in " + key);
  }
  for (const auto& [text, tokens] : spec_.tokenizer) {
    std::string joined;
    for (const auto& t : tokens) {
      if (!vocab_index_.count(t)) {
        throw ValidationError("mock spec: tokenizer entry for '" + text +
                              "' uses unknown token '" + t + "'");
      }
      joined += t;
    }
    if (joined != text) {
      throw ValidationError("mock spec: tokenizer entry for '" + text + "' does not join back");
    }
  }
}

std::vector<std::string> MockBackend::tokenize(const std::string& continuation) const {
  if (const auto it = spec_.tokenizer.find(continuation); it != spec_.tokenizer.end()) {
    return it->second;
  }
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < continuation.size()) {
    std::size_t best = 0;
    for (const auto& tok : spec_.vocabulary) {
      if (tok.size() > best && continuation.compare(pos, tok.size(), tok) == 0) {
        best = tok.size();
      }
    }
    if (best == 0) {
      throw BackendError(BackendError::Kind::kUnknownSymbol,
                         "continuation '" + continuation +
                             "' contains a symbol outside the mock vocabulary at byte " +
                             std::to_string(pos));
    }
    tokens.push_back(continuation.substr(pos, best));
    pos += best;
  }
  return tokens;
}

std::vector<double> MockBackend::logits_at(const std::string& prompt,
                                           const std::string& prefix) const {
  if (!spec_.context_logits.empty()) {
    if (const auto it = spec_.context_logits.find(context_key(prompt, prefix));
        it != spec_.context_logits.end()) {
      std::vector<double> logits(spec_.vocabulary.size(), it->second.rest);
      for (const auto& [token, value] : it->second.listed) logits[vocab_index_.at(token)] = value;
      return logits;
    }
  }
  if (spec_.default_logits) return *spec_.default_logits;
  const auto digest = sha256_fields({std::to_string(seed_), prompt, prefix});
  std::uint64_t state = std::stoull(digest.substr(0, 16), nullptr, 16);
  std::vector<double> logits(spec_.vocabulary.size());
  for (auto& l : logits) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    l = 8.0 * (u - 0.5);
  }
  return logits;
}

ScoreResponse MockBackend::score(const ScoreRequest& request) {
  validate(request);
  ScoreResponse response;
  response.model = spec_.model;
  std::string prefix;
  for (const auto& token : tokenize(request.continuation)) {
    const auto lp = log_softmax(logits_at(request.prompt, prefix), request.temperature);
    TokenLogProb t;
    t.token = token;
    t.logprob = lp[vocab_index_.find(token)->second];
    std::map<std::string, double> alternatives;
    for (std::size_t i = 0; i < lp.size(); ++i) alternatives.emplace(spec_.vocabulary[i], lp[i]);
    t.alternatives = std::move(alternatives);
    t.complete = true;
    response.tokens.push_back(std::move(t));
    prefix += token;
  }
  return response;
}

}  // namespace lexifactor
