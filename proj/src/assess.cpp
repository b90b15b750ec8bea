#include "lexifactor/assess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "lexifactor/error.hpp"
#include "lexifactor/rng.hpp"

namespace lexifactor {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int pattern_of(const LabelSet& labels) {
  int p = 0;
  for (int t = 0; t < kNumTraits; ++t) p = (p << 1) | labels[t];
  return p;
}

std::string pattern_text(int p) {
  std::string s;
  for (int t = kNumTraits - 1; t >= 0; --t) s.push_back(((p >> t) & 1) ? '1' : '0');
  return s;
}

Eigen::MatrixXi labels_for(const Corpus& corpus, const std::vector<std::string>& ids) {
  return label_matrix(corpus.subset(ids));
}

}  // namespace

SplitPlan split(const Corpus& corpus, std::uint64_t seed, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("split: test fraction must be in (0, 1)");
  }
  if (corpus.size() < 2) throw ValidationError("split: need at least 2 stories");
  if (!corpus.fully_labeled()) throw ValidationError("split: every story needs \"labels\"");

  const auto n = corpus.size();
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[pattern_of(*corpus[i].labels)].push_back(i);

  Rng rng(seed);
  std::vector<int> patterns;
  for (auto& [p, members] : groups) {
    rng.shuffle(members);
    patterns.push_back(p);
  }

  auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  SplitPlan plan;
  plan.seed = seed;
  plan.test_fraction = test_fraction;
  plan.method = "stratified-by-label-pattern";
  std::map<int, std::size_t> quota;
  std::size_t assigned = 0;
  for (const auto& [p, members] : groups) {
    const double share = static_cast<double>(members.size()) * test_fraction;
    quota[p] = static_cast<std::size_t>(std::floor(share + 1e-9));
    assigned += quota[p];
    if (share < 1.0 || static_cast<double>(members.size()) - share < 1.0) {
      plan.warnings.push_back("label pattern " + pattern_text(p) + " has " +
                              std::to_string(members.size()) +
                              " member(s), too few to stratify; assigned by seeded order");
    }
  }
  rng.shuffle(patterns);
  while (assigned < n_test) {
    bool progressed = false;
    for (int p : patterns) {
      if (assigned == n_test) break;
      if (quota[p] < groups[p].size()) {
        ++quota[p];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }

  std::vector<char> is_test(n, 0);
  for (const auto& [p, members] : groups) {
    for (std::size_t k = 0; k < quota[p]; ++k) is_test[members[k]] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? plan.test_ids : plan.train_ids).push_back(corpus[i].id);
  }
  return plan;
}

Eigen::MatrixXi predict_by_sign(const Eigen::MatrixXd& oriented) {
  if (oriented.cols() != kNumTraits) throw ValidationError("predict_by_sign: need 5 columns");
  return (oriented.array() >= 0.0).cast<int>();
}

TraitReport make_report(std::string method, std::string model,
                        const std::array<double, kNumTraits>& accuracy, std::size_t test_count) {
  TraitReport r;
  r.method = std::move(method);
  r.model = std::move(model);
  r.accuracy = accuracy;
  r.average = std::accumulate(accuracy.begin(), accuracy.end(), 0.0) / kNumTraits;
  r.test_count = test_count;
  return r;
}

TraitReport evaluate(const std::vector<std::string>& prediction_ids,
                     const Eigen::MatrixXi& predictions,
                     const std::vector<std::string>& label_ids, const Eigen::MatrixXi& labels,
                     std::string method, std::string model) {
  if (predictions.rows() != static_cast<Eigen::Index>(prediction_ids.size()) ||
      labels.rows() != static_cast<Eigen::Index>(label_ids.size()) ||
      predictions.cols() != kNumTraits || labels.cols() != kNumTraits) {
    throw ValidationError("evaluate: matrix shape does not match id lists");
  }
  if (prediction_ids.size() != label_ids.size()) throw ValidationError("evaluate: id mismatch");
  if (prediction_ids.empty()) throw ValidationError("evaluate: no stories");
  std::map<std::string, Eigen::Index> label_row;
  for (std::size_t i = 0; i < label_ids.size(); ++i) {
    label_row.emplace(label_ids[i], static_cast<Eigen::Index>(i));
  }
  std::array<double, kNumTraits> correct{};
  for (std::size_t i = 0; i < prediction_ids.size(); ++i) {
    const auto it = label_row.find(prediction_ids[i]);
    if (it == label_row.end()) {
      throw ValidationError("evaluate: id mismatch ('" + prediction_ids[i] + "' has no label)");
    }
    for (int t = 0; t < kNumTraits; ++t) {
      correct[t] += predictions(static_cast<Eigen::Index>(i), t) == labels(it->second, t);
    }
  }
  for (auto& c : correct) c /= static_cast<double>(prediction_ids.size());
  return make_report(std::move(method), std::move(model), correct, prediction_ids.size());
}

nlohmann::json to_json(const TraitReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["model"] = r.model;
  nlohmann::json acc;
  for (auto t : kAllTraits) acc[std::string(trait_name(t))] = r.accuracy[index_of(t)];
  j["accuracy"] = acc;
  j["average"] = r.average;
  j["test_count"] = r.test_count;
  return j;
}

TraitReport trait_report_from_json(const nlohmann::json& j) {
  try {
    std::array<double, kNumTraits> acc{};
    for (auto t : kAllTraits) acc[index_of(t)] = j.at("accuracy").at(std::string(trait_name(t))).get<double>();
    return make_report(j.at("method").get<std::string>(), j.value("model", ""), acc,
                       j.value("test_count", std::size_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report row: ") + e.what());
  }
}

std::string render_report_table(const std::vector<TraitReport>& rows) {
  std::string out = "| Method | Model |";
  for (auto t : kAllTraits) out += " " + std::string(trait_title(t)) + " |";
  out += " Avg. |\n|---|---|";
  for (int t = 0; t <= kNumTraits; ++t) out += "---|";
  out += '\n';
  for (const auto& r : rows) {
    out += "| " + r.method + " | " + r.model + " |";
    for (double a : r.accuracy) out += " " + fixed3(a) + " |";
    out += " " + fixed3(r.average) + " |\n";
  }
  return out;
}

AssessmentResult run_assessment(const ObservationMatrix& raw, const Corpus& corpus,
                                const Lexicon& lexicon, const AssessOptions& options) {
  if (raw.centered()) throw ValidationError("assess expects the uncentered matrix");
  if (!corpus.fully_labeled()) {
    throw ValidationError("assess needs a labeled corpus (story without \"labels\")");
  }
  if (raw.row_ids() != corpus.ids()) {
    throw ValidationError("matrix rows do not match the corpus story ids");
  }
  if (!raw.provenance().corpus_hash.empty() && raw.provenance().corpus_hash != corpus_hash(corpus)) {
    throw ValidationError("matrix was probed from a different corpus (provenance hash mismatch)");
  }
  if (options.calibration != "train" && options.calibration != "full") {
    throw ValidationError("calibration mode must be 'train' or 'full'");
  }

  AssessmentResult result;
  const bool full = options.calibration == "full";
  if (full) {
    result.plan.seed = options.seed;
    result.plan.test_fraction = 0.0;
    result.plan.method = "full";
    result.plan.train_ids = corpus.ids();
    result.plan.test_ids = corpus.ids();
  } else {
    result.plan = split(corpus, options.seed, options.test_fraction);
  }
  const auto& train_ids = result.plan.train_ids;
  const auto& test_ids = result.plan.test_ids;
  const auto train = raw.select_rows(train_ids);
  const auto test = raw.select_rows(test_ids);
  const auto train_labels = labels_for(corpus, train_ids);
  const auto test_labels = labels_for(corpus, test_ids);
  const auto model = raw.provenance().model;

  // Unsupervised factors, oriented and matched on the calibration labels.
  result.decomposition = svd(zero_center(train), kNumTraits);
  result.alignment = assign_components(accuracy_matrix(result.decomposition.U, train_labels));
  result.alignment.mode = full ? "full" : "train";
  result.alignment.source = full ? "all-stories" : "train-split(seed=" + std::to_string(options.seed) + ")";
  if (options.orient_by_poles) {
    result.alignment = orient_by_poles(result.alignment, result.decomposition, lexicon);
  }
  const auto test_factors = project_rows(result.decomposition, test.values());
  const auto svd_pred = predict_by_sign(apply_alignment(test_factors, result.alignment));
  result.svd_report = evaluate(test_ids, svd_pred, test_ids, test_labels, "SVD", model);

  // Supervised: one Lasso per trait on the raw log-probabilities.
  Eigen::MatrixXi lasso_pred(static_cast<Eigen::Index>(test_ids.size()), kNumTraits);
  for (int t = 0; t < kNumTraits; ++t) {
    const Eigen::VectorXd y = (2 * train_labels.col(t).array() - 1).cast<double>().matrix();
    const double top = lambda_max(train.values(), y);
    const auto grid = top > 0.0 ? log_lambda_grid(top, options.grid_points, options.grid_ratio)
                                : std::vector<double>{0.0};
    result.lambda_selection[t] = select_lambda(train.values(), y, grid, options.folds, options.seed);
    auto m = fit_lasso(train.values(), y, result.lambda_selection[t].lambda);
    m.trait = trait_at(t);
    lasso_pred.col(t) = m.predict(test.values());
    result.lasso[t] = std::move(m);
  }
  result.lasso_report = evaluate(test_ids, lasso_pred, test_ids, test_labels, "Lasso", model);
  return result;
}

}  // namespace lexifactor
