#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lexifactor/align.hpp"
#include "lexifactor/assess.hpp"
#include "lexifactor/cli.hpp"
#include "lexifactor/factor.hpp"
#include "lexifactor/lasso.hpp"
#include "lexifactor/probe.hpp"
#include "lexifactor/svd.hpp"
#include "lexifactor/synth.hpp"

namespace py = pybind11;
using namespace lexifactor;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<std::string> trait_codes(const std::array<BigFiveTrait, kNumTraits>& traits) {
  std::vector<std::string> out;
  for (auto t : traits) out.emplace_back(trait_code(t));
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::dict decomposition(const Eigen::MatrixXd& values, int k) {
  std::vector<std::string> rows, cols;
  for (Eigen::Index i = 0; i < values.rows(); ++i) rows.push_back("r" + std::to_string(i));
  for (Eigen::Index j = 0; j < values.cols(); ++j) cols.push_back("c" + std::to_string(j));
  const auto d = svd(zero_center(ObservationMatrix(values, rows, cols)), k);
  py::dict out;
  out["U"] = d.U;
  out["S"] = d.S;
  out["V"] = d.V;
  out["singular_values"] = d.singular_values;
  out["explained_ratios"] = d.explained.ratios;
  out["explained_cumulative"] = d.explained.cumulative;
  out["column_means"] = d.column_means;
  return out;
}

py::dict alignment(const Eigen::MatrixXd& U, const Eigen::MatrixXi& labels) {
  const auto a = assign_components(accuracy_matrix(U, labels));
  py::dict out;
  out["assignment"] = trait_codes(a.assignment);
  out["orientation"] = a.orientation;
  out["P"] = a.accuracy.P;
  out["raw"] = a.accuracy.raw;
  out["aligned"] = apply_alignment(U, a);
  return out;
}

py::dict assignment_from_accuracy(const Eigen::MatrixXd& P) {
  AccuracyMatrix acc;
  acc.P = P;
  acc.raw = P;
  const auto a = assign_components(acc);
  py::dict out;
  out["assignment"] = trait_codes(a.assignment);
  out["grid"] = render_accuracy_grid(a);
  return out;
}

py::dict lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, double tolerance) {
  LassoOptions o;
  o.tolerance = tolerance;
  const auto m = fit_lasso(X, y, lambda, o);
  py::dict out;
  out["weights"] = m.weights;
  out["intercept"] = m.intercept;
  out["feature_means"] = m.feature_means;
  out["feature_stds"] = m.feature_stds;
  out["dropped"] = m.dropped;
  out["sweeps"] = m.sweeps;
  out["converged"] = m.converged;
  out["decision"] = m.decision(X);
  return out;
}

py::dict synthesize(std::size_t n, double mu, double noise_sigma, std::uint64_t seed) {
  const auto& lex = default_lexicon();
  const auto b = generate(n, lex, mu, noise_sigma, seed);
  py::dict out;
  out["matrix"] = b.matrix.values();
  out["ids"] = b.matrix.row_ids();
  out["words"] = b.matrix.column_words();
  out["labels"] = label_matrix(b.corpus);
  out["loadings"] = b.truth.loadings;
  out["factor_scores"] = b.truth.factor_scores;
  out["component_traits"] = trait_codes(b.truth.component_traits);
  out["predicted_accuracy"] = predicted_accuracy(b.truth);
  return out;
}

std::vector<std::tuple<std::string, std::string, std::string>> lexicon_entries() {
  std::vector<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& e : default_lexicon().entries()) {
    out.emplace_back(e.word, std::string(trait_code(e.trait)), e.pole == Pole::kPositive ? "+" : "-");
  }
  return out;
}

std::string report_table(const py::list& rows) {
  std::vector<TraitReport> reports;
  for (const auto& r : rows) reports.push_back(trait_report_from_json(py_to_json(r)));
  return render_report_table(reports);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lexical factor analysis of language-model adjective scores";

  m.def("run_cli", &cli, py::arg("args"),
        "Runs the command line tool in-process; returns (exit_code, stdout, stderr).");
  m.def(
      "jacobi_svd",
      [](const Eigen::MatrixXd& A) {
        const auto r = jacobi_svd(A);
        return py::make_tuple(r.U, r.S, r.V);
      },
      py::arg("A"), "Thin SVD by one-sided Jacobi rotations: (U, S, V) with A = U diag(S) V^T.");
  m.def("factor_decomposition", &decomposition, py::arg("values"), py::arg("k") = 5,
        "Column-centers `values` and returns the rank-k decomposition with explained variance.");
  m.def("rescale_logprob", &rescale_logprob, py::arg("distribution"), py::arg("target"),
        py::arg("from_temperature"), py::arg("to_temperature"));
  m.def("align_components", &alignment, py::arg("U"), py::arg("labels"),
        "Matches the five columns of U to traits by sign accuracy against N x 5 binary labels.");
  m.def("assign_from_accuracy", &assignment_from_accuracy, py::arg("P"));
  m.def("fit_lasso", &lasso, py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("tolerance") = 1e-9);
  m.def("lambda_max", &lambda_max, py::arg("X"), py::arg("y"));
  m.def("synthesize", &synthesize, py::arg("n"), py::arg("mu") = 2.0, py::arg("noise_sigma") = 0.0,
        py::arg("seed") = 0);
  m.def("toy_tokenize", &toy_tokenize, py::arg("word"));
  m.def("default_lexicon", &lexicon_entries, "(word, trait code, pole) for the bundled adjectives.");
  m.def("render_report_table", &report_table, py::arg("rows"));
  m.def(
      "build_prompt",
      [](const std::string& text) { return build_prompt(Story{"story", text, std::nullopt}); },
      py::arg("text"));
  m.def("decomposition_json", [](const py::dict& d) { return json_to_py(to_json(decomposition_from_json(py_to_json(d)))); },
        py::arg("decomposition"), "Validates and normalizes a decomposition.json document.");
}
