#include "lexifactor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "lexifactor/error.hpp"
#include "lexifactor/rng.hpp"

namespace lexifactor {

namespace {

constexpr double kBranchShare = 1.0 - 1e-3;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(r.size()) != cols) throw ValidationError("truth: ragged matrix");
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = r[static_cast<std::size_t>(j)];
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

std::string story_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn%04zu", i);
  return buf;
}

}  // namespace

int PlantedModel::component_of(BigFiveTrait t) const {
  for (int c = 0; c < kNumTraits; ++c) {
    if (component_traits[c] == t) return c;
  }
  throw ValidationError("planted model: trait not carried by any component");
}

SyntheticBundle generate(std::size_t n, const Lexicon& lexicon, double mu, double noise_sigma,
                         std::uint64_t seed, const SynthOptions& options) {
  if (n < 10) throw ValidationError("synth: need at least 10 stories");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("synth: mu must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ValidationError("synth: noise sigma must be >= 0");
  }
  if (!(options.base_scale > 0.0) || !(options.scale_ratio > 0.0) ||
      !(options.bias_low <= options.bias_high) || !(options.cross_loading >= 0.0)) {
    throw ValidationError("synth: degenerate options");
  }
  {
    std::set<BigFiveTrait> seen(options.component_traits.begin(), options.component_traits.end());
    if (seen.size() != kNumTraits) throw ValidationError("synth: component traits must be a permutation");
  }
  const auto d = static_cast<Eigen::Index>(lexicon.size());
  if (d == 0) throw ValidationError("synth: empty lexicon");
  const auto rows = static_cast<Eigen::Index>(n);

  Rng rng(seed);
  PlantedModel truth;
  truth.mu = mu;
  truth.noise_sigma = noise_sigma;
  truth.seed = seed;
  truth.cross_loading = options.cross_loading;
  truth.component_traits = options.component_traits;

  // Labels: consecutive blocks of 32 cover every pattern once.
  std::vector<LabelSet> labels(n);
  std::vector<int> patterns(32);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 32 == 0) {
      for (int p = 0; p < 32; ++p) patterns[static_cast<std::size_t>(p)] = p;
      rng.shuffle(patterns);
    }
    const int p = patterns[i % 32];
    for (int t = 0; t < kNumTraits; ++t) labels[i][t] = (p >> (kNumTraits - 1 - t)) & 1;
  }

  truth.loadings = Eigen::MatrixXd::Zero(d, kNumTraits);
  for (int c = 0; c < kNumTraits; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto& adj = lexicon[static_cast<std::size_t>(j)];
      const double u = rng.uniform();
      if (adj.trait == options.component_traits[c]) {
        truth.loadings(j, c) = static_cast<int>(adj.pole) * (0.5 + u);
      } else if (options.cross_loading > 0.0) {
        truth.loadings(j, c) = options.cross_loading * (2.0 * u - 1.0);
      }
    }
  }
  // Gram-Schmidt in component order; a trait absent from the lexicon keeps
  // a zero column.
  for (int c = 0; c < kNumTraits; ++c) {
    for (int p = 0; p < c; ++p) {
      truth.loadings.col(c) -= truth.loadings.col(p).dot(truth.loadings.col(c)) * truth.loadings.col(p);
    }
    const double norm = truth.loadings.col(c).norm();
    if (norm > 1e-12) {
      truth.loadings.col(c) /= norm;
    } else {
      truth.loadings.col(c).setZero();
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& adj = lexicon[static_cast<std::size_t>(j)];
    const double own = truth.loadings(j, truth.component_of(adj.trait));
    if (own * static_cast<int>(adj.pole) <= 0.0) {
      throw ValidationError("synth: cross loading " + std::to_string(options.cross_loading) +
                            " flips the pole sign of '" + adj.word + "'");
    }
  }

  truth.frequency_bias.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) truth.frequency_bias(j) = rng.uniform(options.bias_low, options.bias_high);

  truth.scales.resize(kNumTraits);
  for (int c = 0; c < kNumTraits; ++c) truth.scales(c) = options.base_scale * std::pow(options.scale_ratio, c);

  truth.factor_scores.resize(rows, kNumTraits);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int c = 0; c < kNumTraits; ++c) {
      const int label = labels[static_cast<std::size_t>(i)][index_of(options.component_traits[c])];
      truth.factor_scores(i, c) = (label ? mu : -mu) + rng.normal();
    }
  }

  Eigen::MatrixXd values = truth.factor_scores * truth.scales.asDiagonal() * truth.loadings.transpose();
  values.rowwise() += truth.frequency_bias.transpose();
  if (noise_sigma > 0.0) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) values(i, j) += noise_sigma * rng.normal();
    }
  }

  std::vector<Story> stories;
  stories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = story_id(i);
    stories.push_back({id, "Synthetic story " + id + ".", labels[i]});
  }
  SyntheticBundle bundle;
  bundle.corpus = Corpus(std::move(stories));
  Provenance prov;
  prov.model = "synthetic";
  prov.corpus_hash = corpus_hash(bundle.corpus);
  prov.lexicon_hash = lexicon_hash(lexicon);
  bundle.matrix = ObservationMatrix(std::move(values), bundle.corpus.ids(), lexicon.words(), prov);
  bundle.truth = std::move(truth);
  return bundle;
}

double noise_for_explained_variance(std::size_t n, std::size_t d, double mu,
                                    const Eigen::VectorXd& scales, double target) {
  if (n < 2 || d <= static_cast<std::size_t>(kNumTraits)) {
    throw ValidationError("noise calibration: need n >= 2 and d > 5");
  }
  if (!(target > 0.0 && target < 1.0)) throw ValidationError("noise calibration: target in (0, 1)");
  const double rows = static_cast<double>(n - 1);
  const double cols = static_cast<double>(d);
  const double signal = rows * (mu * mu + 1.0) * scales.squaredNorm();
  // Each leading direction also collects about (rows + cols) sigma^2 of noise.
  const double denom = target * cols * rows - kNumTraits * (rows + cols);
  if (!(denom > 0.0)) throw ValidationError("noise calibration: target unreachable for this shape");
  return std::sqrt(signal * (1.0 - target) / denom);
}

std::array<double, kNumTraits> predicted_accuracy(const PlantedModel& truth) {
  std::array<double, kNumTraits> out{};
  for (auto t : kAllTraits) {
    const int c = truth.component_of(t);
    const double a = truth.scales(c) * truth.loadings.col(c).norm();
    const double s = truth.noise_sigma;
    out[index_of(t)] = a == 0.0 ? 0.5 : normal_cdf(truth.mu * a / std::sqrt(a * a + s * s));
  }
  return out;
}

SyntheticBundle select(const SyntheticBundle& bundle, const std::vector<std::string>& ids,
                       const std::vector<std::string>& words) {
  const auto& all_words = bundle.matrix.column_words();
  std::vector<Eigen::Index> cols;
  for (const auto& w : words) {
    const auto it = std::find(all_words.begin(), all_words.end(), w);
    if (it == all_words.end()) throw ValidationError("select: unknown word '" + w + "'");
    cols.push_back(it - all_words.begin());
  }
  const auto rowsel = bundle.matrix.select_rows(ids);
  Eigen::MatrixXd values(rowsel.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) values.col(static_cast<Eigen::Index>(k)) = rowsel.values().col(cols[k]);

  SyntheticBundle out;
  out.corpus = bundle.corpus.subset(ids);
  out.truth = bundle.truth;
  out.truth.loadings.resize(static_cast<Eigen::Index>(cols.size()), kNumTraits);
  out.truth.frequency_bias.resize(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.truth.loadings.row(static_cast<Eigen::Index>(k)) = bundle.truth.loadings.row(cols[k]);
    out.truth.frequency_bias(static_cast<Eigen::Index>(k)) = bundle.truth.frequency_bias(cols[k]);
  }
  out.truth.factor_scores.resize(static_cast<Eigen::Index>(ids.size()), kNumTraits);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = *bundle.corpus.find(ids[i]);
    out.truth.factor_scores.row(static_cast<Eigen::Index>(i)) =
        bundle.truth.factor_scores.row(static_cast<Eigen::Index>(row));
  }
  auto prov = bundle.matrix.provenance();
  prov.corpus_hash = corpus_hash(out.corpus);
  prov.lexicon_hash.clear();
  out.matrix = ObservationMatrix(std::move(values), ids, words, prov);
  return out;
}

std::vector<std::string> toy_tokenize(const std::string& word) {
  if (word.empty()) throw ValidationError("toy tokenizer: empty word");
  const std::size_t len = word.size();
  const std::size_t pieces = std::min<std::size_t>(4, (len + 3) / 4);
  const std::size_t base = len / pieces;
  const std::size_t extra = len % pieces;
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < pieces; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    out.push_back(word.substr(pos, size));
    pos += size;
  }
  return out;
}

MockSpec to_mock_spec(const SyntheticBundle& bundle, const Lexicon& lexicon,
                      const PromptTemplate& tmpl, bool leading_space) {
  const auto& words = bundle.matrix.column_words();
  for (const auto& w : words) {
    if (!lexicon.find(w)) throw ValidationError("mock spec: matrix column '" + w + "' is not in the lexicon");
  }
  if (bundle.matrix.centered()) throw ValidationError("mock spec: needs the uncentered matrix");

  MockSpec spec;
  spec.model = "synthetic-mock";
  std::vector<std::vector<std::string>> sequences;
  std::set<std::string> vocab;
  for (const auto& w : words) {
    auto tokens = toy_tokenize(w);
    if (leading_space) tokens.front() = " " + tokens.front();
    for (const auto& t : tokens) {
      if (t == kFillerToken) throw ValidationError("mock spec: word chunk collides with the filler token");
      vocab.insert(t);
    }
    spec.tokenizer[(leading_space ? " " : "") + w] = tokens;
    sequences.push_back(std::move(tokens));
  }
  {
    auto sorted = sequences;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      const auto& a = sorted[k - 1];
      const auto& b = sorted[k];
      if (a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) {
        throw ValidationError("mock spec: word tokens of one adjective prefix another's");
      }
    }
  }
  // Internal nodes are addressed by their text; two token paths must not
  // reach the same text.
  std::map<std::string, std::vector<std::string>> node_path;
  for (const auto& seq : sequences) {
    std::string text;
    std::vector<std::string> path;
    for (std::size_t q = 0; q + 1 < seq.size(); ++q) {
      text += seq[q];
      path.push_back(seq[q]);
      const auto [it, inserted] = node_path.emplace(text, path);
      if (!inserted && it->second != path) {
        throw ValidationError("mock spec: toy tokenizer cannot represent the lexicon (ambiguous prefix '" +
                              text + "')");
      }
    }
  }
  spec.vocabulary.assign(vocab.begin(), vocab.end());
  spec.vocabulary.emplace_back(kFillerToken);
  const auto vocab_size = static_cast<double>(spec.vocabulary.size());

  const auto& values = bundle.matrix.values();
  for (std::size_t i = 0; i < bundle.corpus.size(); ++i) {
    const auto& story = bundle.corpus[i];
    const auto row = static_cast<Eigen::Index>(i);
    if (bundle.matrix.row_ids()[i] != story.id) throw ValidationError("mock spec: matrix rows out of corpus order");
    const auto prompt = build_prompt(story, tmpl);

    // Node text -> child token -> mass, where a word's mass is
    // exp(value) / share^(tokens - 1) so path products telescope to exp(value).
    std::map<std::string, std::map<std::string, double>> children;
    for (std::size_t j = 0; j < sequences.size(); ++j) {
      const auto& seq = sequences[j];
      const double v = values(row, static_cast<Eigen::Index>(j));
      const double mass = std::exp(v - static_cast<double>(seq.size() - 1) * std::log(kBranchShare));
      std::string text;
      for (const auto& tok : seq) {
        children[text][tok] += mass;
        text += tok;
      }
    }
    for (const auto& [text, kids] : children) {
      double total = 0.0;
      for (const auto& kv : kids) total += kv.second;
      const double share = text.empty() ? 1.0 : kBranchShare / total;
      double used = 0.0;
      SparseLogits sparse;
      for (const auto& [tok, mass] : kids) {
        const double p = text.empty() ? mass : kBranchShare * mass / total;
        sparse.listed[tok] = std::log(mass) + std::log(share);
        used += p;
      }
      if (text.empty() && !(used < 1.0 - 1e-6)) {
        throw ValidationError("mock spec: story '" + story.id +
                              "' has adjective probabilities summing to >= 1");
      }
      sparse.rest = std::log((1.0 - used) / (vocab_size - static_cast<double>(kids.size())));
      spec.context_logits.emplace(context_key(prompt, text), std::move(sparse));
    }
  }
  return spec;
}

nlohmann::json to_json(const PlantedModel& truth, const std::vector<std::string>& words) {
  nlohmann::json j;
  j["seed"] = truth.seed;
  j["mu"] = truth.mu;
  j["noise_sigma"] = truth.noise_sigma;
  j["cross_loading"] = truth.cross_loading;
  auto traits = nlohmann::json::array();
  for (auto t : truth.component_traits) traits.push_back(std::string(trait_name(t)));
  j["component_traits"] = traits;
  j["scales"] = to_vector(truth.scales);
  j["words"] = words;
  j["frequency_bias"] = to_vector(truth.frequency_bias);
  j["loadings"] = matrix_to_json(truth.loadings);
  j["factor_scores"] = matrix_to_json(truth.factor_scores);
  return j;
}

PlantedModel planted_model_from_json(const nlohmann::json& j) {
  try {
    PlantedModel t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.mu = j.at("mu").get<double>();
    t.noise_sigma = j.at("noise_sigma").get<double>();
    t.cross_loading = j.value("cross_loading", 0.0);
    const auto names = j.at("component_traits").get<std::vector<std::string>>();
    if (names.size() != kNumTraits) throw ValidationError("truth: need 5 component traits");
    for (int c = 0; c < kNumTraits; ++c) {
      const auto trait = parse_trait(names[static_cast<std::size_t>(c)]);
      if (!trait) throw ValidationError("truth: unknown trait '" + names[static_cast<std::size_t>(c)] + "'");
      t.component_traits[c] = *trait;
    }
    const auto scales = j.at("scales").get<std::vector<double>>();
    t.scales = Eigen::Map<const Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
    const auto bias = j.at("frequency_bias").get<std::vector<double>>();
    t.frequency_bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    t.loadings = matrix_from_json(j.at("loadings"), kNumTraits);
    t.factor_scores = matrix_from_json(j.at("factor_scores"), kNumTraits);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed truth record: ") + e.what());
  }
}

void write_bundle(const SyntheticBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  {
    std::ofstream out(root / "corpus.jsonl", std::ios::binary);
    out << serialize_corpus(bundle.corpus);
    if (!out) throw RuntimeError("cannot write " + (root / "corpus.jsonl").string());
  }
  write_matrix(bundle.matrix, (root / "matrix.tsv").string());
  std::ofstream out(root / "truth.json", std::ios::binary);
  out << to_json(bundle.truth, bundle.matrix.column_words()).dump(1) << '\n';
  if (!out) throw RuntimeError("cannot write " + (root / "truth.json").string());
}

}  // namespace lexifactor
