#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexifactor/backend.hpp"
#include "lexifactor/corpus.hpp"
#include "lexifactor/matrix.hpp"

namespace lexifactor {

class PromptTemplate {
 public:
  static constexpr std::string_view kPlaceholder = "{story}";

  // Exactly one placeholder; must end with an opening quotation mark.
  explicit PromptTemplate(std::string text);
  static const PromptTemplate& default_template();

  const std::string& text() const { return text_; }
  std::string hash() const;

 private:
  std::string text_;
};

std::string build_prompt(const Story& story, const PromptTemplate& tmpl = PromptTemplate::default_template());

struct AdjectiveScore {
  std::string story_id;
  std::string word;
  double logprob = 0.0;
  std::vector<std::string> tokens;
  std::vector<double> token_breakdown;
  double temperature = 1.0;  // temperature the value is expressed at

  bool operator==(const AdjectiveScore&) const = default;
};

struct ScoreOptions {
  double temperature = 1.0;  // measurement temperature T_o
  // Re-express each token at this temperature; needs complete
  // distributions from the backend.
  std::optional<double> target_temperature;
  bool leading_space = false;
};

AdjectiveScore score_adjective(Backend& backend, const std::string& prompt,
                               const TraitAdjective& adjective, const ScoreOptions& options = {});

// Log-probability of `target` at temperature `to_temperature`, given the
// complete distribution measured at `from_temperature`.
double rescale_logprob(const std::map<std::string, double>& distribution,
                       const std::string& target, double from_temperature,
                       double to_temperature);

std::string cache_key(const std::string& model, const std::string& template_hash,
                      const std::string& story_id, const std::string& word,
                      const ScoreOptions& options);

// Append-only JSON-lines store of AdjectiveScore records. In-memory when
// constructed without a path. Writes are serialized.
class ScoreCache {
 public:
  ScoreCache() = default;
  explicit ScoreCache(std::string path);

  std::optional<AdjectiveScore> get(const std::string& key) const;
  void put(const std::string& key, const AdjectiveScore& score);
  std::size_t size() const;
  const std::string& path() const { return path_; }
  // Lines that failed to parse on load (e.g. a truncated final write).
  std::size_t skipped_lines() const { return skipped_; }

 private:
  std::string path_;
  std::unordered_map<std::string, AdjectiveScore> entries_;
  mutable std::mutex mutex_;
  std::size_t skipped_ = 0;
  bool needs_newline_ = false;
};

struct ProbeOptions {
  ScoreOptions score;
  const PromptTemplate* prompt_template = nullptr;  // default when null
  int max_concurrency = 1;
  // Cell visiting order as flat indices i * D + j; identity when empty.
  std::vector<std::size_t> order;
};

struct ProbeResult {
  ObservationMatrix matrix;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
};

class ProbeError : public RuntimeError {
 public:
  ProbeError(const std::string& what, std::vector<std::pair<std::string, std::string>> completed,
             std::size_t total)
      : RuntimeError(what), completed_(std::move(completed)), total_(total) {}
  // (story id, adjective) pairs that finished before the failure.
  const std::vector<std::pair<std::string, std::string>>& completed() const { return completed_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<std::pair<std::string, std::string>> completed_;
  std::size_t total_;
};

ProbeResult probe_corpus(Backend& backend, const Corpus& corpus, const Lexicon& lexicon,
                         ScoreCache& cache, const ProbeOptions& options = {});

std::string lexicon_hash(const Lexicon& lexicon);

}  // namespace lexifactor
