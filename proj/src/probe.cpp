#include "lexifactor/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "lexifactor/hash.hpp"

namespace lexifactor {

namespace {

constexpr const char* kDefaultTemplate =
    "Following is a personal story.\n"
    "\n"
    "Essay: {story}\n"
    "\n"
    "Question: Based on this essay, describe the personality of the author.\n"
    "Answer with a single adjective.\n"
    "\n"
    "Answer: A single adjective that describes the personality of the author is \"";

nlohmann::json score_to_json(const std::string& key, const AdjectiveScore& s) {
  nlohmann::ordered_json j;
  j["key"] = key;
  j["story_id"] = s.story_id;
  j["word"] = s.word;
  j["logprob"] = s.logprob;
  j["tokens"] = s.tokens;
  j["token_logprobs"] = s.token_breakdown;
  j["temperature"] = s.temperature;
  return nlohmann::json(j);
}

AdjectiveScore score_from_json(const nlohmann::json& j) {
  AdjectiveScore s;
  s.story_id = j.at("story_id").get<std::string>();
  s.word = j.at("word").get<std::string>();
  s.logprob = j.at("logprob").get<double>();
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  s.token_breakdown = j.at("token_logprobs").get<std::vector<double>>();
  s.temperature = j.at("temperature").get<double>();
  return s;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  const auto first = text_.find(kPlaceholder);
  if (first == std::string::npos) {
    throw ValidationError("prompt template needs a " + std::string(kPlaceholder) + " placeholder");
  }
  if (text_.find(kPlaceholder, first + 1) != std::string::npos) {
    throw ValidationError("prompt template has more than one placeholder");
  }
  if (text_.empty() || text_.back() != '"') {
    throw ValidationError("prompt template must end with an opening quotation mark");
  }
}

const PromptTemplate& PromptTemplate::default_template() {
  static const PromptTemplate tmpl{std::string(kDefaultTemplate)};
  return tmpl;
}

std::string PromptTemplate::hash() const { return sha256_hex(text_); }

std::string build_prompt(const Story& story, const PromptTemplate& tmpl) {
  if (story.text.empty()) throw ValidationError("story '" + story.id + "' has empty text");
  auto out = tmpl.text();
  out.replace(out.find(PromptTemplate::kPlaceholder), PromptTemplate::kPlaceholder.size(),
              story.text);
  return out;
}

double rescale_logprob(const std::map<std::string, double>& distribution,
                       const std::string& target, double from_temperature,
                       double to_temperature) {
  if (!(from_temperature > 0.0) || !(to_temperature > 0.0) ||
      !std::isfinite(from_temperature) || !std::isfinite(to_temperature)) {
    throw ValidationError("rescale: temperatures must be finite and positive");
  }
  const auto it = distribution.find(target);
  if (it == distribution.end()) {
    throw ValidationError("rescale: target token '" + target + "' absent from distribution");
  }
  double mass = 0.0;
  for (const auto& [tok, lp] : distribution) mass += std::exp(lp);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw ValidationError("rescale: distribution is incomplete (probability mass " +
                          format_double(mass) + ")");
  }
  if (from_temperature == to_temperature) return it->second;

  const double ratio = from_temperature / to_temperature;
  const double lp_target = it->second;
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& [tok, lp] : distribution) peak = std::max(peak, (lp - lp_target) * ratio);
  double sum = 0.0;
  for (const auto& [tok, lp] : distribution) sum += std::exp((lp - lp_target) * ratio - peak);
  return -(peak + std::log(sum));
}

AdjectiveScore score_adjective(Backend& backend, const std::string& prompt,
                               const TraitAdjective& adjective, const ScoreOptions& options) {
  const bool rescale =
      options.target_temperature && *options.target_temperature != options.temperature;
  if (rescale && !backend.capabilities().full_vocabulary) {
    throw ValidationError(
        "temperature rescaling needs full-vocabulary distributions; this backend only "
        "returns top-k alternatives");
  }
  ScoreRequest request;
  request.prompt = prompt;
  request.continuation = options.leading_space ? " " + adjective.word : adjective.word;
  request.model = backend.model_id();
  request.temperature = options.temperature;
  request.want_alternatives = rescale;
  const auto response = backend.score(request);
  check_coverage(response, request.continuation);

  AdjectiveScore score;
  score.word = adjective.word;
  score.temperature = rescale ? *options.target_temperature : options.temperature;
  for (const auto& t : response.tokens) {
    double lp = t.logprob;
    if (rescale) {
      if (!t.alternatives || !t.complete) {
        throw BackendError(BackendError::Kind::kRefused,
                           "backend did not return a complete distribution for token '" +
                               t.token + "'");
      }
      lp = rescale_logprob(*t.alternatives, t.token, options.temperature,
                           *options.target_temperature);
    }
    score.tokens.push_back(t.token);
    score.token_breakdown.push_back(lp);
  }
  score.logprob = std::accumulate(score.token_breakdown.begin(), score.token_breakdown.end(), 0.0);
  return score;
}

std::string cache_key(const std::string& model, const std::string& template_hash,
                      const std::string& story_id, const std::string& word,
                      const ScoreOptions& options) {
  return sha256_fields({model, template_hash, story_id, word, format_double(options.temperature),
                        options.target_temperature ? format_double(*options.target_temperature)
                                                   : std::string("-"),
                        options.leading_space ? "space" : "nospace"});
}

ScoreCache::ScoreCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // created on first write
  std::string line;
  while (std::getline(in, line)) {
    // A record cut off by a crash has no newline; the next append must not
    // extend it.
    needs_newline_ = in.eof();
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries_.insert_or_assign(j.at("key").get<std::string>(), score_from_json(j));
    } catch (const nlohmann::json::exception&) {
      ++skipped_;
    }
  }
}

std::optional<AdjectiveScore> ScoreCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::put(const std::string& key, const AdjectiveScore& score) {
  std::lock_guard lock(mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw RuntimeError("cannot append to cache " + path_);
    if (needs_newline_) {
      out << '\n';
      needs_newline_ = false;
    }
    out << score_to_json(key, score).dump() << '\n';
    out.flush();
  }
  entries_.insert_or_assign(key, score);
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string lexicon_hash(const Lexicon& lexicon) { return sha256_hex(serialize_lexicon(lexicon)); }

ProbeResult probe_corpus(Backend& backend, const Corpus& corpus, const Lexicon& lexicon,
                         ScoreCache& cache, const ProbeOptions& options) {
  if (corpus.size() == 0) throw ValidationError("probe: empty corpus");
  if (lexicon.size() == 0) throw ValidationError("probe: empty lexicon");
  if (options.max_concurrency < 1) throw ValidationError("probe: max_concurrency < 1");
  const auto& tmpl =
      options.prompt_template ? *options.prompt_template : PromptTemplate::default_template();
  const auto n = corpus.size();
  const auto d = lexicon.size();
  const auto total = n * d;

  std::vector<std::size_t> order = options.order;
  if (order.empty()) {
    order.resize(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < total; ++k) {
      if (sorted.size() != total || sorted[k] != k) {
        throw ValidationError("probe: order must be a permutation of all cells");
      }
    }
  }

  std::vector<std::string> prompts;
  prompts.reserve(n);
  for (const auto& s : corpus.stories()) prompts.push_back(build_prompt(s, tmpl));
  const auto template_hash = tmpl.hash();
  const auto model = backend.model_id();

  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<char> done(total, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> hits{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&] {
    while (!failed.load()) {
      const auto k = next.fetch_add(1);
      if (k >= total) return;
      const auto cell = order[k];
      const auto i = cell / d;
      const auto j = cell % d;
      const auto& story = corpus[i];
      const auto& adj = lexicon[j];
      try {
        const auto key = cache_key(model, template_hash, story.id, adj.word, options.score);
        auto cached = cache.get(key);
        if (cached) {
          ++hits;
        } else {
          ++calls;
          auto s = score_adjective(backend, prompts[i], adj, options.score);
          s.story_id = story.id;
          cache.put(key, s);
          cached = std::move(s);
        }
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cached->logprob;
        done[cell] = 1;
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failed.exchange(true)) {
          first_error = "probe failed at story '" + story.id + "', adjective '" + adj.word +
                        "': " + e.what();
        }
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(options.max_concurrency), total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (failed) {
    std::vector<std::pair<std::string, std::string>> completed;
    for (std::size_t cell = 0; cell < total; ++cell) {
      if (done[cell]) completed.emplace_back(corpus[cell / d].id, lexicon[cell % d].word);
    }
    throw ProbeError(first_error + " (" + std::to_string(completed.size()) + " of " +
                         std::to_string(total) + " cells completed and cached)",
                     std::move(completed), total);
  }

  Provenance prov;
  prov.model = model;
  prov.temperature = options.score.target_temperature.value_or(options.score.temperature);
  prov.prompt_hash = template_hash;
  prov.leading_space = options.score.leading_space;
  prov.corpus_hash = corpus_hash(corpus);
  prov.lexicon_hash = lexicon_hash(lexicon);
  ProbeResult result{ObservationMatrix(std::move(values), corpus.ids(), lexicon.words(), prov),
                     calls.load(), hits.load()};
  return result;
}

}  // namespace lexifactor
