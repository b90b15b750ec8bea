#include "lexifactor/align.hpp"

#include <algorithm>
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

}  // namespace

AccuracyMatrix accuracy_matrix(const Eigen::MatrixXd& U, const Eigen::MatrixXi& labels) {
  if (U.cols() < 1 || U.rows() < 1) throw ValidationError("accuracy_matrix: empty factor matrix");
  if (labels.rows() != U.rows() || labels.cols() != kNumTraits) {
    throw ValidationError("accuracy_matrix: labels must be N x 5 with N = " +
                          std::to_string(U.rows()));
  }
  const auto n = static_cast<double>(U.rows());
  AccuracyMatrix out;
  out.raw.resize(U.cols(), kNumTraits);
  out.P.resize(U.cols(), kNumTraits);
  for (Eigen::Index i = 0; i < U.cols(); ++i) {
    for (int j = 0; j < kNumTraits; ++j) {
      Eigen::Index matches = 0;
      for (Eigen::Index r = 0; r < U.rows(); ++r) {
        const bool positive = U(r, i) >= 0.0;
        matches += positive == (labels(r, j) == 1);
      }
      const double a = static_cast<double>(matches) / n;
      out.raw(i, j) = a;
      out.P(i, j) = std::max(a, 1.0 - a);
    }
  }
  return out;
}

int TraitAlignment::component_for(BigFiveTrait t) const {
  for (int i = 0; i < kNumTraits; ++i) {
    if (assignment[i] == t) return i;
  }
  throw ValidationError("alignment is not a permutation");
}

TraitAlignment assign_components(const AccuracyMatrix& accuracy) {
  const auto& P = accuracy.P;
  if (P.rows() != kNumTraits || P.cols() != kNumTraits) {
    throw ValidationError("assign_components needs k = 5 (got k = " + std::to_string(P.rows()) + ")");
  }
  std::array<int, kNumTraits> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  auto best = perm;
  double best_sum = -1.0;
  do {
    double sum = 0.0;
    for (int i = 0; i < kNumTraits; ++i) sum += P(i, perm[i]);
    // Sums equal up to rounding count as ties; the earlier permutation wins.
    if (sum > best_sum + 1e-12) {
      best_sum = sum;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TraitAlignment out;
  out.accuracy = accuracy;
  for (int i = 0; i < kNumTraits; ++i) {
    out.assignment[i] = trait_at(best[i]);
    out.orientation[i] = accuracy.raw(i, best[i]) >= 0.5 ? 1 : -1;
  }
  return out;
}

Eigen::MatrixXd apply_alignment(const Eigen::MatrixXd& U, const TraitAlignment& alignment) {
  if (U.cols() != kNumTraits) {
    throw ValidationError("apply_alignment: factor matrix needs 5 columns (got " +
                          std::to_string(U.cols()) + ")");
  }
  Eigen::MatrixXd out(U.rows(), kNumTraits);
  std::array<bool, kNumTraits> seen{};
  for (int i = 0; i < kNumTraits; ++i) {
    const int t = index_of(alignment.assignment[i]);
    if (seen[t]) throw ValidationError("apply_alignment: assignment is not a permutation");
    seen[t] = true;
    const int o = alignment.orientation[i];
    if (o != 1 && o != -1) throw ValidationError("apply_alignment: orientation must be +1 or -1");
    out.col(t) = static_cast<double>(o) * U.col(i);
  }
  return out;
}

Eigen::MatrixXd apply_alignment(const FactorDecomposition& decomp, const TraitAlignment& alignment) {
  if (decomp.k != kNumTraits) {
    throw ValidationError("apply_alignment: decomposition k = " + std::to_string(decomp.k) +
                          ", alignment expects 5");
  }
  return apply_alignment(decomp.U, alignment);
}

TraitAlignment orient_by_poles(const TraitAlignment& alignment, const FactorDecomposition& decomp,
                               const Lexicon& lexicon) {
  if (decomp.k != kNumTraits) throw ValidationError("orient_by_poles needs k = 5");
  TraitAlignment out = alignment;
  out.source = "pole-loadings";
  for (int i = 0; i < kNumTraits; ++i) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t w = 0; w < decomp.column_words.size(); ++w) {
      const auto idx = lexicon.find(decomp.column_words[w]);
      if (!idx) continue;
      const auto& e = lexicon[*idx];
      if (e.trait != alignment.assignment[i]) continue;
      sum += static_cast<double>(static_cast<int>(e.pole)) * decomp.V(static_cast<Eigen::Index>(w), i);
      ++count;
    }
    if (count == 0) {
      throw ValidationError("no lexicon adjectives for trait " +
                            std::string(trait_name(alignment.assignment[i])));
    }
    out.orientation[i] = sum >= 0.0 ? 1 : -1;
  }
  return out;
}

nlohmann::json to_json(const TraitAlignment& a) {
  nlohmann::ordered_json j;
  std::vector<std::string> perm;
  for (auto t : a.assignment) perm.emplace_back(trait_code(t));
  j["permutation"] = perm;
  j["orientation"] = a.orientation;
  j["calibration_set"] = a.source;
  j["mode"] = a.mode;
  auto grid = [](const Eigen::MatrixXd& M) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(M.cols()));
      for (Eigen::Index c = 0; c < M.cols(); ++c) r[static_cast<std::size_t>(c)] = M(i, c);
      rows.push_back(r);
    }
    return rows;
  };
  j["P"] = grid(a.accuracy.P);
  j["raw"] = grid(a.accuracy.raw);
  return nlohmann::json(j);
}

TraitAlignment alignment_from_json(const nlohmann::json& j) {
  TraitAlignment a;
  try {
    const auto perm = j.at("permutation").get<std::vector<std::string>>();
    const auto orient = j.at("orientation").get<std::vector<int>>();
    if (perm.size() != kNumTraits || orient.size() != kNumTraits) {
      throw ValidationError("alignment record needs 5 components");
    }
    for (int i = 0; i < kNumTraits; ++i) {
      const auto t = parse_trait(perm[i]);
      if (!t) throw ValidationError("alignment record: unknown trait '" + perm[i] + "'");
      a.assignment[i] = *t;
      a.orientation[i] = orient[i];
    }
    a.source = j.value("calibration_set", "");
    a.mode = j.value("mode", "full");
    auto read_grid = [](const nlohmann::json& g) {
      Eigen::MatrixXd M(static_cast<Eigen::Index>(g.size()), kNumTraits);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto r = g[i].get<std::vector<double>>();
        if (r.size() != kNumTraits) throw ValidationError("alignment record: P rows need 5 entries");
        for (int c = 0; c < kNumTraits; ++c) M(static_cast<Eigen::Index>(i), c) = r[c];
      }
      return M;
    };
    a.accuracy.P = read_grid(j.at("P"));
    a.accuracy.raw = j.contains("raw") ? read_grid(j.at("raw")) : a.accuracy.P;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed alignment record: ") + e.what());
  }
  return a;
}

std::string render_accuracy_grid(const TraitAlignment& a) {
  std::string out = "| Index |";
  for (auto t : kAllTraits) out += " " + std::string(trait_title(t)) + " |";
  out += "\n|---|";
  for (int t = 0; t < kNumTraits; ++t) out += "---|";
  out += '\n';
  for (Eigen::Index i = 0; i < a.accuracy.P.rows(); ++i) {
    out += "| " + std::to_string(i + 1) + " |";
    for (int t = 0; t < kNumTraits; ++t) {
      const auto cell = fixed3(a.accuracy.P(i, t));
      const bool matched = i < kNumTraits && index_of(a.assignment[static_cast<std::size_t>(i)]) == t;
      out += matched ? " **" + cell + "** |" : " " + cell + " |";
    }
    out += '\n';
  }
  return out;
}

}  // namespace lexifactor
