#include "lexifactor/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lexifactor/align.hpp"
#include "lexifactor/assess.hpp"
#include "lexifactor/error.hpp"
#include "lexifactor/factor.hpp"
#include "lexifactor/mock_backend.hpp"
#include "lexifactor/probe.hpp"
#include "lexifactor/remote_backend.hpp"
#include "lexifactor/synth.hpp"

namespace lexifactor {

namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ValidationError(what + " path does not exist: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + what + ": " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path, const std::string& what) {
  const auto text = read_text(path, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed " + what + " " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw RuntimeError("cannot write " + path.string());
}

const std::string& require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ValidationError(flag + " is required");
  return value;
}

Lexicon lexicon_for(const RunConfig& c) {
  if (c.lexicon.empty()) return default_lexicon();
  read_text(c.lexicon, "lexicon");
  return load_lexicon_file(c.lexicon);
}

Corpus corpus_for(const RunConfig& c) {
  read_text(require(c.dataset, "--dataset"), "dataset");
  return load_corpus_file(c.dataset);
}

std::unique_ptr<PromptTemplate> template_for(const RunConfig& c) {
  if (c.prompt_template.empty()) return std::make_unique<PromptTemplate>(PromptTemplate::default_template());
  return std::make_unique<PromptTemplate>(read_text(c.prompt_template, "prompt template"));
}

std::string matrix_path_for(const RunConfig& c) {
  return c.matrix.empty() ? (fs::path(c.output_dir) / "matrix.tsv").string() : c.matrix;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

int cmd_probe(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto corpus = corpus_for(c);
  const auto lexicon = lexicon_for(c);
  const auto tmpl = template_for(c);

  std::unique_ptr<Backend> backend;
  if (c.backend == "mock") {
    auto spec = mock_spec_from_json(read_json(require(c.mock_spec, "--mock-spec"), "mock spec"));
    if (!c.model.empty()) spec.model = c.model;
    backend = std::make_unique<MockBackend>(std::move(spec), c.seed);
  } else {
    RemoteConfig rc;
    rc.base_url = c.endpoint;
    rc.model = require(c.model, "--model");
    rc.api_key_env = c.api_key_env;
    rc.top_k = c.top_k;
    rc.full_vocabulary = c.full_vocabulary;
    rc.max_in_flight = c.concurrency;
    backend = std::make_unique<RemoteBackend>(rc);
  }

  const auto cache_path = c.cache.empty() ? (fs::path(c.output_dir) / "cache.jsonl").string() : c.cache;
  if (fs::path(cache_path).has_parent_path()) fs::create_directories(fs::path(cache_path).parent_path());
  ScoreCache cache(cache_path);
  if (cache.skipped_lines() > 0) {
    err << "warning: skipped " << cache.skipped_lines() << " unreadable cache line(s) in " << cache_path << '\n';
  }

  ProbeOptions opts;
  opts.score.temperature = c.temperature;
  opts.score.target_temperature = c.target_temperature;
  opts.score.leading_space = c.leading_space;
  opts.prompt_template = tmpl.get();
  opts.max_concurrency = c.concurrency;

  const auto cells = corpus.size() * lexicon.size();
  try {
    const auto result = probe_corpus(*backend, corpus, lexicon, cache, opts);
    const auto path = matrix_path_for(c);
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    write_matrix(result.matrix, path);
    out << "probe: " << corpus.size() << " stories x " << lexicon.size() << " adjectives = " << cells
        << " cells\n"
        << "  " << result.backend_calls << " backend calls, " << result.cache_hits << " cache hits\n"
        << "  matrix: " << path << "\n  cache: " << cache_path << '\n';
  } catch (const ProbeError& e) {
    err << "probe failed: " << e.what() << '\n'
        << "  completed " << e.completed().size() << " of " << e.total()
        << " cells; they are cached in " << cache_path << " and a rerun resumes from there\n";
    return 1;
  }
  return 0;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  const auto matrix = read_matrix(require(c.matrix, "--matrix"));
  if (matrix.centered()) throw ValidationError("analyze expects the uncentered matrix");
  const auto lexicon = lexicon_for(c);
  const auto limit = std::min(matrix.rows(), matrix.cols());
  if (c.k < 1 || c.k > limit) {
    throw ValidationError("k = " + std::to_string(c.k) + " outside [1, min(N, D) = " +
                          std::to_string(limit) + "]");
  }
  const auto decomp = svd(zero_center(matrix), c.k);
  const fs::path dir(c.output_dir);
  write_text(dir / "decomposition.json", to_json(decomp).dump(1) + "\n");
  write_text(dir / "scree.tsv", format_scree_table(decomp));
  write_text(dir / "scree.svg", render_scree_svg(decomp));
  const int m = std::min<int>(c.top_m, static_cast<int>(matrix.cols() / 2));
  if (m >= 1) write_text(dir / "loadings.md", render_loading_tables(decomp, m, lexicon));

  out << "analyze: " << matrix.rows() << " x " << matrix.cols() << ", k = " << c.k << '\n';
  for (int i = 0; i < c.k; ++i) {
    out << "  component " << i + 1 << ": singular value " << fixed(decomp.S(i), 4)
        << ", cumulative explained " << fixed(decomp.explained.cumulative(i), 4) << '\n';
  }

  if (!c.dataset.empty()) {
    const auto corpus = corpus_for(c);
    if (matrix.row_ids() != corpus.ids()) throw ValidationError("matrix rows do not match the corpus story ids");
    if (!matrix.provenance().corpus_hash.empty() && matrix.provenance().corpus_hash != corpus_hash(corpus)) {
      throw ValidationError("matrix was probed from a different corpus (provenance hash mismatch)");
    }
    if (c.k != kNumTraits) throw ValidationError("alignment needs k = 5");
    auto alignment = assign_components(accuracy_matrix(decomp.U, label_matrix(corpus)));
    alignment.mode = "full";
    alignment.source = "all-stories";
    write_text(dir / "alignment.json", to_json(alignment).dump(1) + "\n");
    write_text(dir / "accuracy.md", render_accuracy_grid(alignment));
    out << "  alignment:";
    for (int i = 0; i < kNumTraits; ++i) {
      out << ' ' << i + 1 << "->" << (alignment.orientation[i] < 0 ? "-" : "+")
          << trait_code(alignment.assignment[i]);
    }
    out << '\n';
  }
  out << "  wrote " << dir.string() << '\n';
  return 0;
}

int cmd_assess(const RunConfig& c, std::ostream& out) {
  const auto matrix = read_matrix(require(c.matrix, "--matrix"));
  const auto corpus = corpus_for(c);
  const auto lexicon = lexicon_for(c);
  if (!matrix.provenance().lexicon_hash.empty() && matrix.column_words() == lexicon.words() &&
      matrix.provenance().lexicon_hash != lexicon_hash(lexicon)) {
    throw ValidationError("matrix was probed with a different lexicon (provenance hash mismatch)");
  }
  const auto grid = parse_lambda_grid(c.lambda_grid);
  AssessOptions opts;
  opts.seed = c.seed;
  opts.test_fraction = c.test_fraction;
  opts.folds = c.folds;
  opts.grid_points = grid.points;
  opts.grid_ratio = grid.ratio;
  opts.calibration = c.calibration;
  const auto result = run_assessment(matrix, corpus, lexicon, opts);

  nlohmann::json j;
  j["matrix_hash"] = matrix_hash(matrix);
  j["corpus_hash"] = corpus_hash(corpus);
  j["protocol"] = {{"seed", c.seed},
                   {"test_fraction", c.test_fraction},
                   {"folds", c.folds},
                   {"lambda_grid", c.lambda_grid},
                   {"calibration", c.calibration},
                   {"split", result.plan.method},
                   {"train_count", result.plan.train_ids.size()},
                   {"test_count", result.plan.test_ids.size()},
                   {"warnings", result.plan.warnings}};
  j["test_ids"] = result.plan.test_ids;
  j["alignment"] = to_json(result.alignment);
  j["svd"] = to_json(result.svd_report);
  j["lasso"] = to_json(result.lasso_report);
  auto models = nlohmann::json::array();
  for (int t = 0; t < kNumTraits; ++t) {
    auto mj = to_json(result.lasso[t], matrix.column_words());
    mj["cv_error"] = result.lambda_selection[t].cv_error;
    mj["lambda_grid"] = result.lambda_selection[t].grid;
    models.push_back(mj);
  }
  j["lasso_models"] = models;

  const fs::path dir(c.output_dir);
  const auto table = render_report_table({result.svd_report, result.lasso_report});
  write_text(dir / "report.json", j.dump(1) + "\n");
  write_text(dir / "report.md", table);
  write_text(dir / "accuracy.md", render_accuracy_grid(result.alignment));
  out << "assess: " << result.plan.train_ids.size() << " train / " << result.plan.test_ids.size()
      << " test stories (seed " << c.seed << ", calibration " << c.calibration << ")\n";
  for (const auto& w : result.plan.warnings) out << "  warning: " << w << '\n';
  out << table << "  wrote " << dir.string() << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  const auto lexicon = lexicon_for(c);
  const SynthOptions so;
  Eigen::VectorXd scales(kNumTraits);
  for (int i = 0; i < kNumTraits; ++i) scales(i) = so.base_scale * std::pow(so.scale_ratio, i);
  const double sigma = c.noise_sigma ? *c.noise_sigma
                                     : noise_for_explained_variance(c.stories, lexicon.size(), c.mu,
                                                                    scales, c.explained_variance);
  const auto bundle = generate(c.stories, lexicon, c.mu, sigma, c.seed, so);
  write_bundle(bundle, c.output_dir);
  const auto tmpl = template_for(c);
  const auto spec = to_mock_spec(bundle, lexicon, *tmpl, c.leading_space);
  const auto spec_path = c.mock_spec.empty() ? (fs::path(c.output_dir) / "mock_spec.json").string() : c.mock_spec;
  write_text(spec_path, to_json(spec).dump() + "\n");

  const auto expected = predicted_accuracy(bundle.truth);
  out << "synth: " << c.stories << " stories x " << lexicon.size() << " adjectives, mu " << c.mu
      << ", noise sigma " << fixed(sigma, 6) << " (seed " << c.seed << ")\n  expected sign accuracy:";
  for (auto t : kAllTraits) out << ' ' << trait_code(t) << ' ' << fixed(expected[index_of(t)], 3);
  out << "\n  wrote " << c.output_dir << " and " << spec_path << '\n';
  return 0;
}

std::vector<TraitReport> rows_from(const nlohmann::json& j) {
  std::vector<TraitReport> rows;
  if (j.is_array()) {
    for (const auto& r : j) rows.push_back(trait_report_from_json(r));
  } else if (j.contains("rows")) {
    for (const auto& r : j.at("rows")) rows.push_back(trait_report_from_json(r));
  } else if (j.contains("svd") || j.contains("lasso")) {
    if (j.contains("svd")) rows.push_back(trait_report_from_json(j.at("svd")));
    if (j.contains("lasso")) rows.push_back(trait_report_from_json(j.at("lasso")));
  } else {
    rows.push_back(trait_report_from_json(j));
  }
  return rows;
}

TraitAlignment alignment_from(const nlohmann::json& j) {
  const auto& a = j.contains("alignment") ? j.at("alignment") : j;
  if (a.contains("permutation")) return alignment_from_json(a);
  // Bare accuracy grid: match it here.
  try {
    const auto g = a.at("P");
    Eigen::MatrixXd P(static_cast<Eigen::Index>(g.size()), kNumTraits);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto r = g[i].get<std::vector<double>>();
      if (r.size() != kNumTraits) throw ValidationError("accuracy grid rows need 5 entries");
      for (int t = 0; t < kNumTraits; ++t) P(static_cast<Eigen::Index>(i), t) = r[static_cast<std::size_t>(t)];
    }
    return assign_components({P, P});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed alignment record: ") + e.what());
  }
}

}  // namespace

LambdaGrid parse_lambda_grid(const std::string& descriptor) {
  LambdaGrid g;
  const auto bad = [&] {
    return ValidationError("lambda grid '" + descriptor + "': expected log:<points>:<ratio>");
  };
  if (descriptor.rfind("log:", 0) != 0) throw bad();
  const auto rest = descriptor.substr(4);
  const auto colon = rest.find(':');
  if (colon == std::string::npos) throw bad();
  try {
    std::size_t used = 0;
    g.points = std::stoi(rest.substr(0, colon), &used);
    if (used != colon) throw bad();
    const auto ratio_text = rest.substr(colon + 1);
    g.ratio = std::stod(ratio_text, &used);
    if (used != ratio_text.size()) throw bad();
  } catch (const std::logic_error&) {
    throw bad();
  }
  if (g.points < 1 || !(g.ratio > 0.0 && g.ratio < 1.0)) throw bad();
  return g;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "lexicon") c.lexicon = v.get<std::string>();
      else if (key == "backend") c.backend = v.get<std::string>();
      else if (key == "endpoint") c.endpoint = v.get<std::string>();
      else if (key == "mock_spec") c.mock_spec = v.get<std::string>();
      else if (key == "model") c.model = v.get<std::string>();
      else if (key == "api_key_env") c.api_key_env = v.get<std::string>();
      else if (key == "prompt_template") c.prompt_template = v.get<std::string>();
      else if (key == "temperature") c.temperature = v.get<double>();
      else if (key == "target_temperature") {
        if (!v.is_null()) c.target_temperature = v.get<double>();
      } else if (key == "leading_space") c.leading_space = v.get<bool>();
      else if (key == "full_vocabulary") c.full_vocabulary = v.get<bool>();
      else if (key == "top_k") c.top_k = v.get<int>();
      else if (key == "concurrency") c.concurrency = v.get<int>();
      else if (key == "cache") c.cache = v.get<std::string>();
      else if (key == "matrix") c.matrix = v.get<std::string>();
      else if (key == "k") c.k = v.get<int>();
      else if (key == "top_m") c.top_m = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "test_fraction") c.test_fraction = v.get<double>();
      else if (key == "lambda_grid") c.lambda_grid = v.get<std::string>();
      else if (key == "folds") c.folds = v.get<int>();
      else if (key == "calibration") c.calibration = v.get<std::string>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "stories") c.stories = v.get<std::size_t>();
      else if (key == "mu") c.mu = v.get<double>();
      else if (key == "noise_sigma") {
        if (!v.is_null()) c.noise_sigma = v.get<double>();
      } else if (key == "explained_variance") c.explained_variance = v.get<double>();
      else throw ValidationError("config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset;
  j["lexicon"] = c.lexicon;
  j["backend"] = c.backend;
  j["endpoint"] = c.endpoint;
  j["mock_spec"] = c.mock_spec;
  j["model"] = c.model;
  j["api_key_env"] = c.api_key_env;
  j["prompt_template"] = c.prompt_template;
  j["temperature"] = c.temperature;
  j["target_temperature"] = c.target_temperature ? nlohmann::json(*c.target_temperature) : nlohmann::json();
  j["leading_space"] = c.leading_space;
  j["full_vocabulary"] = c.full_vocabulary;
  j["top_k"] = c.top_k;
  j["concurrency"] = c.concurrency;
  j["cache"] = c.cache;
  j["matrix"] = c.matrix;
  j["k"] = c.k;
  j["top_m"] = c.top_m;
  j["seed"] = c.seed;
  j["test_fraction"] = c.test_fraction;
  j["lambda_grid"] = c.lambda_grid;
  j["folds"] = c.folds;
  j["calibration"] = c.calibration;
  j["output_dir"] = c.output_dir;
  j["stories"] = c.stories;
  j["mu"] = c.mu;
  j["noise_sigma"] = c.noise_sigma ? nlohmann::json(*c.noise_sigma) : nlohmann::json();
  j["explained_variance"] = c.explained_variance;
  return j;
}

void validate(const RunConfig& c) {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(c.temperature)) throw ValidationError("temperature must be > 0");
  if (c.target_temperature && !positive(*c.target_temperature)) {
    throw ValidationError("target temperature must be > 0");
  }
  if (c.backend != "mock" && c.backend != "remote") {
    throw ValidationError("backend must be 'mock' or 'remote', got '" + c.backend + "'");
  }
  if (c.top_k < 1) throw ValidationError("top_k must be >= 1");
  if (c.concurrency < 1) throw ValidationError("concurrency must be >= 1");
  if (c.k < 1) throw ValidationError("k must be >= 1");
  if (c.top_m < 1) throw ValidationError("top_m must be >= 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw ValidationError("test fraction must be in (0, 1)");
  }
  if (c.folds < 2) throw ValidationError("folds must be >= 2");
  if (c.calibration != "train" && c.calibration != "full") {
    throw ValidationError("calibration must be 'train' or 'full'");
  }
  parse_lambda_grid(c.lambda_grid);
  if (c.stories < 10) throw ValidationError("synth needs at least 10 stories");
  if (!positive(c.mu)) throw ValidationError("mu must be > 0");
  if (c.noise_sigma && !(std::isfinite(*c.noise_sigma) && *c.noise_sigma >= 0.0)) {
    throw ValidationError("noise sigma must be >= 0");
  }
  if (!(c.explained_variance > 0.0 && c.explained_variance < 1.0)) {
    throw ValidationError("explained variance target must be in (0, 1)");
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trait-adjective log-probability probing and factor analysis", "lexifactor"};
  app.require_subcommand(1);

  RunConfig flags;
  std::string config_path;
  double target_temperature = 0.0;
  double noise_sigma = 0.0;
  std::vector<std::string> report_inputs;
  std::string alignment_input;
  std::string report_out;
  // Copies a flag's value over the config-file value when the flag was given.
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  const auto add = [&](CLI::App* sub, const std::string& name, auto RunConfig::*field,
                       const std::string& help) {
    auto* opt = sub->add_option(name, flags.*field, help);
    overrides.emplace_back(opt, [field, &flags](RunConfig& c) { c.*field = flags.*field; });
    return opt;
  };
  const auto add_flag = [&](CLI::App* sub, const std::string& name, bool RunConfig::*field,
                            const std::string& help) {
    auto* opt = sub->add_flag(name, flags.*field, help);
    overrides.emplace_back(opt, [field, &flags](RunConfig& c) { c.*field = flags.*field; });
  };
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its fields");
    add(sub, "--lexicon", &RunConfig::lexicon, "Lexicon file (bundled 100-adjective list by default)");
    add(sub, "--out-dir,--output-dir", &RunConfig::output_dir, "Output directory");
    add(sub, "--seed", &RunConfig::seed, "Seed for every random choice");
  };

  auto* probe = app.add_subcommand("probe", "Score every (story, adjective) pair into a matrix");
  common(probe);
  add(probe, "--dataset", &RunConfig::dataset, "Story corpus (JSON lines)");
  add(probe, "--backend", &RunConfig::backend, "mock or remote");
  add(probe, "--endpoint", &RunConfig::endpoint, "Completions server base URL");
  add(probe, "--mock-spec", &RunConfig::mock_spec, "Mock backend spec (JSON)");
  add(probe, "--model", &RunConfig::model, "Model id");
  add(probe, "--api-key-env", &RunConfig::api_key_env, "Environment variable holding the API key");
  add(probe, "--prompt-template", &RunConfig::prompt_template, "Prompt template file with {story}");
  add(probe, "--temperature", &RunConfig::temperature, "Measurement temperature");
  auto* target_opt = probe->add_option("--target-temperature", target_temperature,
                                       "Re-express scores at this temperature");
  add_flag(probe, "--leading-space", &RunConfig::leading_space, "Score ' word' instead of 'word'");
  add_flag(probe, "--full-vocabulary", &RunConfig::full_vocabulary,
           "Remote server returns complete distributions");
  add(probe, "--top-k", &RunConfig::top_k, "Alternatives requested per token");
  add(probe, "--concurrency", &RunConfig::concurrency, "Requests in flight");
  add(probe, "--cache", &RunConfig::cache, "Score cache (JSON lines)");
  add(probe, "--matrix", &RunConfig::matrix, "Output matrix path");

  auto* analyze = app.add_subcommand("analyze", "Center, decompose, and report loadings");
  common(analyze);
  add(analyze, "--matrix", &RunConfig::matrix, "Observation matrix");
  add(analyze, "--dataset", &RunConfig::dataset, "Labeled corpus; adds the trait alignment");
  add(analyze, "-k,--k", &RunConfig::k, "Components kept");
  add(analyze, "--top", &RunConfig::top_m, "Adjectives per loading table end");

  auto* assess = app.add_subcommand("assess", "SVD-sign and Lasso trait prediction");
  common(assess);
  add(assess, "--matrix", &RunConfig::matrix, "Observation matrix");
  add(assess, "--dataset", &RunConfig::dataset, "Labeled corpus");
  add(assess, "--test-fraction", &RunConfig::test_fraction, "Held-out share");
  add(assess, "--folds", &RunConfig::folds, "Cross-validation folds");
  add(assess, "--lambda-grid", &RunConfig::lambda_grid, "log:<points>:<ratio>");
  add(assess, "--calibration", &RunConfig::calibration, "train or full");

  auto* synth = app.add_subcommand("synth", "Planted-factor bundle plus matching mock spec");
  common(synth);
  add(synth, "--stories", &RunConfig::stories, "Number of stories");
  add(synth, "--mu", &RunConfig::mu, "Factor score separation");
  auto* sigma_opt = synth->add_option("--noise-sigma", noise_sigma, "Noise level (overrides the target)");
  add(synth, "--explained-variance", &RunConfig::explained_variance, "Top-5 explained variance target");
  add(synth, "--mock-spec", &RunConfig::mock_spec, "Mock spec output path");
  add(synth, "--prompt-template", &RunConfig::prompt_template, "Prompt template file with {story}");
  add_flag(synth, "--leading-space", &RunConfig::leading_space, "Plant ' word' instead of 'word'");

  auto* report = app.add_subcommand("report", "Render stored records as tables");
  report->add_option("--reports", report_inputs, "Report records (assess output or row lists)");
  report->add_option("--alignment", alignment_input, "Alignment record or bare accuracy grid");
  report->add_option("--out", report_out, "Write here instead of standard output");

  std::vector<const char*> argv{"lexifactor"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : config_from_json(read_json(config_path, "config"));
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(config);
    }
    if (target_opt->count() > 0) config.target_temperature = target_temperature;
    if (sigma_opt->count() > 0) config.noise_sigma = noise_sigma;
    validate(config);

    if (probe->parsed()) return cmd_probe(config, out, err);
    if (analyze->parsed()) return cmd_analyze(config, out);
    if (assess->parsed()) return cmd_assess(config, out);
    if (synth->parsed()) return cmd_synth(config, out);

    if (report_inputs.empty() && alignment_input.empty()) {
      throw ValidationError("report needs --reports and/or --alignment");
    }
    std::string text;
    if (!report_inputs.empty()) {
      std::vector<TraitReport> rows;
      for (const auto& path : report_inputs) {
        auto more = rows_from(read_json(path, "report"));
        rows.insert(rows.end(), more.begin(), more.end());
      }
      text += render_report_table(rows);
    }
    if (!alignment_input.empty()) {
      if (!text.empty()) text += '\n';
      text += render_accuracy_grid(alignment_from(read_json(alignment_input, "alignment")));
    }
    if (report_out.empty()) {
      out << text;
    } else {
      write_text(report_out, text);
      out << "wrote " << report_out << '\n';
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lexifactor
