#include "lexifactor/factor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lexifactor/error.hpp"

namespace lexifactor {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index c = 0; c < M.cols(); ++c) row[static_cast<std::size_t>(c)] = M(i, c);
    j.push_back(row);
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError("decomposition record: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
  }
  return M;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

LoadingEntry annotate(const FactorDecomposition& d, const Lexicon& lexicon, Eigen::Index row,
                      int component) {
  const auto& word = d.column_words[static_cast<std::size_t>(row)];
  const auto idx = lexicon.find(word);
  if (!idx) throw ValidationError("adjective '" + word + "' is not in the lexicon");
  const auto& e = lexicon[*idx];
  return {word, e.trait, e.pole, d.V(row, component)};
}

}  // namespace

ColumnStats column_stats(const ObservationMatrix& X) {
  const auto n = X.rows();
  if (n < 2) throw ValidationError("column_stats needs at least 2 rows");
  ColumnStats s;
  s.mean = X.values().colwise().mean().transpose();
  s.std.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double ss = (X.values().col(j).array() - s.mean(j)).square().sum();
    s.std(j) = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

Eigen::MatrixXd correlation_matrix(const ObservationMatrix& X) {
  const auto stats = column_stats(X);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!(stats.std(j) > 0.0)) {
      throw ValidationError("zero-variance column '" + X.column_words()[static_cast<std::size_t>(j)] +
                            "' has no defined correlation");
    }
  }
  Eigen::MatrixXd centered = X.values().rowwise() - stats.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  Eigen::MatrixXd corr(X.cols(), X.cols());
  for (Eigen::Index a = 0; a < X.cols(); ++a) {
    for (Eigen::Index b = 0; b < X.cols(); ++b) {
      corr(a, b) = a == b ? 1.0 : std::clamp(cov(a, b) / (stats.std(a) * stats.std(b)), -1.0, 1.0);
    }
  }
  return corr;
}

Eigen::VectorXd center_columns(Eigen::MatrixXd& values) {
  Eigen::VectorXd means = values.colwise().mean().transpose();
  values.rowwise() -= means.transpose();
  return means;
}

ObservationMatrix zero_center(const ObservationMatrix& X) {
  if (X.centered()) throw ValidationError("matrix is already centered");
  if (X.rows() == 0) throw ValidationError("cannot center an empty matrix");
  Eigen::MatrixXd values = X.values();
  auto means = center_columns(values);
  return ObservationMatrix(std::move(values), X.row_ids(), X.column_words(), X.provenance(),
                           std::move(means));
}

ExplainedVariance explained_variance(const Eigen::VectorXd& s) {
  if (s.size() == 0) throw ValidationError("explained_variance: empty spectrum");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) >= 0.0)) throw ValidationError("explained_variance: negative singular value");
    if (i > 0 && s(i) > s(i - 1)) {
      throw ValidationError("explained_variance: singular values must be nonincreasing");
    }
  }
  const double total = s.squaredNorm();
  if (total == 0.0) throw ValidationError("explained_variance: all-zero spectrum");
  ExplainedVariance ev;
  ev.ratios = s.array().square() / total;
  ev.cumulative.resize(s.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    acc += ev.ratios(i);
    ev.cumulative(i) = std::min(acc, 1.0);
  }
  ev.cumulative(s.size() - 1) = 1.0;
  return ev;
}

FactorDecomposition svd(const ObservationMatrix& centered, int k, const JacobiOptions& options) {
  if (!centered.centered()) throw ValidationError("svd needs a centered matrix");
  const auto p = std::min(centered.rows(), centered.cols());
  if (k < 1 || k > p) {
    throw ValidationError("k = " + std::to_string(k) + " outside [1, " + std::to_string(p) + "]");
  }
  const auto full = jacobi_svd(centered.values(), options);
  if (!full.converged) {
    throw RuntimeError("jacobi svd did not converge in " + std::to_string(options.max_sweeps) +
                       " sweeps");
  }
  FactorDecomposition d;
  d.k = k;
  d.U = full.U.leftCols(k);
  d.S = full.S.head(k);
  d.V = full.V.leftCols(k);
  d.singular_values = full.S;
  d.explained = explained_variance(full.S);
  d.row_ids = centered.row_ids();
  d.column_words = centered.column_words();
  d.column_means = *centered.column_means();
  d.source_hash = matrix_hash(centered);
  return d;
}

Eigen::MatrixXd project_rows(const FactorDecomposition& d, const Eigen::MatrixXd& rows) {
  if (rows.cols() != d.V.rows()) throw ValidationError("project_rows: column count mismatch");
  Eigen::MatrixXd scores = (rows.rowwise() - d.column_means.transpose()) * d.V;
  for (int c = 0; c < d.k; ++c) {
    scores.col(c) = d.S(c) > 0.0 ? Eigen::VectorXd(scores.col(c) / d.S(c))
                                 : Eigen::VectorXd::Zero(scores.rows());
  }
  return scores;
}

LoadingSlice top_loadings(const FactorDecomposition& d, int component, int m,
                          const Lexicon& lexicon) {
  if (component < 0 || component >= d.k) {
    throw ValidationError("component index " + std::to_string(component) + " out of range");
  }
  const auto D = d.V.rows();
  if (m < 1 || 2 * static_cast<Eigen::Index>(m) > D) {
    throw ValidationError("top_loadings: m must be in [1, D/2]");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(D));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return d.V(a, component) > d.V(b, component);
  });
  LoadingSlice slice;
  slice.component = component;
  for (int r = 0; r < m; ++r) {
    slice.top.push_back(annotate(d, lexicon, idx[static_cast<std::size_t>(r)], component));
  }
  for (int r = 0; r < m; ++r) {
    slice.bottom.push_back(
        annotate(d, lexicon, idx[static_cast<std::size_t>(D - 1 - r)], component));
  }
  return slice;
}

nlohmann::json to_json(const FactorDecomposition& d) {
  nlohmann::ordered_json j;
  j["k"] = d.k;
  j["source_matrix_sha256"] = d.source_hash;
  j["row_ids"] = d.row_ids;
  j["column_words"] = d.column_words;
  j["column_means"] = to_std(d.column_means);
  j["singular_values"] = to_std(d.singular_values);
  j["explained_ratios"] = to_std(d.explained.ratios);
  j["explained_cumulative"] = to_std(d.explained.cumulative);
  j["S"] = to_std(d.S);
  j["U"] = matrix_json(d.U);
  j["V"] = matrix_json(d.V);
  return nlohmann::json(j);
}

FactorDecomposition decomposition_from_json(const nlohmann::json& j) {
  FactorDecomposition d;
  try {
    d.k = j.at("k").get<int>();
    d.source_hash = j.at("source_matrix_sha256").get<std::string>();
    d.row_ids = j.at("row_ids").get<std::vector<std::string>>();
    d.column_words = j.at("column_words").get<std::vector<std::string>>();
    d.column_means = vector_from_json(j.at("column_means"));
    d.singular_values = vector_from_json(j.at("singular_values"));
    d.explained.ratios = vector_from_json(j.at("explained_ratios"));
    d.explained.cumulative = vector_from_json(j.at("explained_cumulative"));
    d.S = vector_from_json(j.at("S"));
    d.U = matrix_from_json(j.at("U"), d.k);
    d.V = matrix_from_json(j.at("V"), d.k);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed decomposition record: ") + e.what());
  }
  if (d.S.size() != d.k || d.U.rows() != static_cast<Eigen::Index>(d.row_ids.size()) ||
      d.V.rows() != static_cast<Eigen::Index>(d.column_words.size())) {
    throw ValidationError("decomposition record: inconsistent dimensions");
  }
  return d;
}

std::string format_scree_table(const FactorDecomposition& d) {
  std::string out = "component\tsingular_value\tratio\tcumulative\n";
  for (Eigen::Index i = 0; i < d.singular_values.size(); ++i) {
    out += std::to_string(i + 1) + '\t' + format_double(d.singular_values(i)) + '\t' +
           format_double(d.explained.ratios(i)) + '\t' + format_double(d.explained.cumulative(i)) +
           '\n';
  }
  return out;
}

std::string render_scree_svg(const FactorDecomposition& d) {
  constexpr double kWidth = 640, kHeight = 360, kMargin = 40;
  const auto n = d.singular_values.size();
  const double smax = n > 0 ? std::max(d.singular_values(0), 1e-300) : 1.0;
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const double bar_w = n > 0 ? plot_w / static_cast<double>(n) : plot_w;
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                kWidth, kHeight);
  svg += buf;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = plot_h * d.singular_values(i) / smax;
    std::snprintf(buf, sizeof buf,
                  "  <rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#d4a017\"/>\n",
                  kMargin + bar_w * static_cast<double>(i), kMargin + plot_h - h, bar_w * 0.8, h);
    svg += buf;
  }
  svg += "  <polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "",
                  kMargin + bar_w * (static_cast<double>(i) + 0.4),
                  kMargin + plot_h * (1.0 - d.explained.cumulative(i)));
    svg += buf;
  }
  svg += "\"/>\n";
  if (n >= 5) {
    std::snprintf(buf, sizeof buf,
                  "  <text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">cumulative@5 = %.3f</text>\n",
                  kMargin, kMargin - 10, d.explained.cumulative(4));
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_loading_tables(const FactorDecomposition& d, int m, const Lexicon& lexicon) {
  std::string out;
  for (int c = 0; c < d.k; ++c) {
    const auto slice = top_loadings(d, c, m, lexicon);
    out += "### Dimension " + std::to_string(c + 1) + "\n\n";
    out += "| Adjective | Factor | Pole | Loading |\n|---|---|---|---|\n";
    auto row = [&](const LoadingEntry& e) {
      out += "| " + e.word + " | " + std::string(trait_code(e.trait)) + " | " +
             (e.pole == Pole::kPositive ? "+" : "-") + " | " + fixed3(e.loading) + " |\n";
    };
    for (const auto& e : slice.top) row(e);
    out += "| ... | | | |\n";
    // Most negative last, as a continuous ranking.
    for (auto it = slice.bottom.rbegin(); it != slice.bottom.rend(); ++it) row(*it);
    out += '\n';
  }
  return out;
}

}  // namespace lexifactor
