#include <doctest.h>

#include <filesystem>
#include <set>

#include "lexifactor/error.hpp"
#include "lexifactor/align.hpp"
#include "lexifactor/factor.hpp"
#include "lexifactor/synth.hpp"
#include "test_util.hpp"

using namespace lexifactor;

namespace {

double matched_accuracy(const SyntheticBundle& b) {
  const auto d = svd(zero_center(b.matrix), 5);
  const auto a = assign_components(accuracy_matrix(d.U, label_matrix(b.corpus)));
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += a.accuracy.P(i, index_of(a.assignment[static_cast<std::size_t>(i)]));
  return s / 5.0;
}

// Probes `b` through a mock built from it and returns the largest cell error.
double closure_error(const SyntheticBundle& b, const Lexicon& lex) {
  MockBackend mock(to_mock_spec(b, lex), 0);
  ScoreCache cache;
  const auto r = probe_corpus(mock, b.corpus, lex, cache);
  return (r.matrix.values() - b.matrix.values()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("noiseless matrix has rank five after centering") {
  const auto b = generate(64, default_lexicon(), 2.0, 0.0, 1);
  const auto C = zero_center(b.matrix);
  const auto r = jacobi_svd(C.values());
  CHECK(r.S(4) > 1e-3 * r.S(0));
  CHECK(r.S(5) <= 1e-10 * r.S(0));
}

TEST_CASE("planted structure") {
  const auto& lex = default_lexicon();
  const auto b = generate(70, lex, 2.0, 0.5, 4);
  const auto& t = b.truth;
  CHECK((t.loadings.transpose() * t.loadings - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-12);
  for (std::size_t j = 0; j < lex.size(); ++j) {
    const int c = t.component_of(lex[j].trait);
    CHECK(t.loadings(static_cast<Eigen::Index>(j), c) * static_cast<int>(lex[j].pole) > 0.0);
  }
  for (int c = 0; c < 5; ++c) CHECK(t.scales(c) == doctest::Approx(2.0 * std::pow(0.8, c)));
  CHECK(t.frequency_bias.maxCoeff() <= -6.0);
  CHECK(t.frequency_bias.minCoeff() >= -20.0);
  CHECK(b.matrix.row_ids() == b.corpus.ids());
  CHECK(b.matrix.provenance().corpus_hash == corpus_hash(b.corpus));
  // Each full block of 32 stories covers every label pattern once.
  const auto L = label_matrix(b.corpus);
  for (int block = 0; block < 2; ++block) {
    std::set<int> seen;
    for (int i = 0; i < 32; ++i) {
      int p = 0;
      for (int k = 0; k < 5; ++k) p = p * 2 + L(block * 32 + i, k);
      seen.insert(p);
    }
    CHECK(seen.size() == 32);
  }
  CHECK_THROWS_AS(generate(5, lex, 2.0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(generate(40, lex, 0.0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(generate(40, lex, 2.0, -1.0, 1), ValidationError);
}

TEST_CASE("seeded determinism") {
  const auto& lex = default_lexicon();
  const auto a = generate(40, lex, 2.0, 0.4, 9);
  const auto b = generate(40, lex, 2.0, 0.4, 9);
  const auto c = generate(40, lex, 2.0, 0.4, 10);
  CHECK(format_matrix_table(a.matrix) == format_matrix_table(b.matrix));
  CHECK(to_json(a.truth, lex.words()) == to_json(b.truth, lex.words()));
  CHECK(format_matrix_table(a.matrix) != format_matrix_table(c.matrix));
}

TEST_CASE("cross loading") {
  const auto& lex = default_lexicon();
  SynthOptions o;
  o.cross_loading = 0.2;
  const auto b = generate(40, lex, 2.0, 0.0, 3, o);
  int off = 0;
  for (std::size_t j = 0; j < lex.size(); ++j) {
    for (int c = 0; c < 5; ++c) {
      if (b.truth.component_traits[static_cast<std::size_t>(c)] != lex[j].trait) {
        off += b.truth.loadings(static_cast<Eigen::Index>(j), c) != 0.0;
      }
    }
  }
  CHECK(off > 300);
  CHECK((b.truth.loadings.transpose() * b.truth.loadings - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-12);
}

TEST_CASE("toy tokenizer") {
  CHECK(toy_tokenize("kind") == std::vector<std::string>{"kind"});
  CHECK(toy_tokenize("shy") == std::vector<std::string>{"shy"});
  CHECK(toy_tokenize("talkative") == std::vector<std::string>{"tal", "kat", "ive"});
  CHECK(toy_tokenize("sophisticated") == std::vector<std::string>{"soph", "ist", "ica", "ted"});
  CHECK(toy_tokenize("uncharacteristically").size() == 4);
  CHECK_THROWS_AS(toy_tokenize(""), ValidationError);
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::string w(1 + rng.below(40), 'a');
    for (auto& ch : w) ch = static_cast<char>('a' + rng.below(26));
    const auto t = toy_tokenize(w);
    std::string joined;
    for (std::size_t k = 0; k < t.size(); ++k) {
      joined += t[k];
      if (k > 0) CHECK(t[k].size() <= t[k - 1].size());
      CHECK(t.front().size() - t[k].size() <= 1);
    }
    CHECK(joined == w);
    CHECK(t.size() <= 4);
  }
}

TEST_CASE("mock closure reproduces the matrix") {
  const auto& lex = default_lexicon();
  const auto b = generate(40, lex, 2.0, 0.4, 21);
  SUBCASE("three stories, full lexicon") {
    const auto sub = select(b, {"syn0003", "syn0017", "syn0030"}, lex.words());
    CHECK(closure_error(sub, lex) <= 1e-9);
  }
  SUBCASE("single adjective") {
    const Lexicon one({lex[7]});
    const auto sub = select(b, {"syn0001", "syn0002"}, one.words());
    CHECK(closure_error(sub, one) <= 1e-9);
  }
  SUBCASE("multi-token words with a leading space") {
    const auto sub = select(b, {"syn0005"}, lex.words());
    MockBackend mock(to_mock_spec(sub, lex, PromptTemplate::default_template(), true), 0);
    ScoreCache cache;
    ProbeOptions o;
    o.score.leading_space = true;
    const auto r = probe_corpus(mock, sub.corpus, lex, cache, o);
    CHECK((r.matrix.values() - sub.matrix.values()).cwiseAbs().maxCoeff() <= 1e-9);
    const auto s = score_adjective(mock, build_prompt(sub.corpus[0]), lex[*lex.find("talkative")], o.score);
    CHECK(s.tokens == std::vector<std::string>{" tal", "kat", "ive"});
  }
  SUBCASE("representability errors") {
    const Lexicon prefix({{"abcd", BigFiveTrait::kExtraversion, Pole::kPositive},
                          {"abcdefgh", BigFiveTrait::kExtraversion, Pole::kNegative}});
    const auto pb = generate(12, prefix, 2.0, 0.0, 1);
    CHECK_THROWS_WITH_AS(to_mock_spec(pb, prefix), doctest::Contains("prefix"), ValidationError);
    const Lexicon ambiguous({{"abcdefghi", BigFiveTrait::kExtraversion, Pole::kPositive},
                             {"abcdefmnopqrstuvwxyzz", BigFiveTrait::kExtraversion, Pole::kNegative}});
    const auto ab = generate(12, ambiguous, 2.0, 0.0, 1);
    CHECK_THROWS_WITH_AS(to_mock_spec(ab, ambiguous), doctest::Contains("ambiguous"), ValidationError);
    CHECK_THROWS_AS(to_mock_spec(select(b, {"syn0001"}, lex.words()), prefix), ValidationError);
  }
}

TEST_CASE("loadings of a planted bundle keep pole signs") {
  const auto& lex = default_lexicon();
  const auto b = generate(208, lex, 8.0, 0.05, 17);
  const auto d = svd(zero_center(b.matrix), 5);
  const auto a = assign_components(accuracy_matrix(d.U, label_matrix(b.corpus)));
  for (int c = 0; c < 5; ++c) {
    const auto trait = a.assignment[static_cast<std::size_t>(c)];
    const int o = a.orientation[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < lex.size(); ++j) {
      if (lex[j].trait != trait) continue;
      CHECK(o * d.V(static_cast<Eigen::Index>(j), c) * static_cast<int>(lex[j].pole) > 0.0);
    }
  }
}

TEST_CASE("recovery degrades with noise") {
  const auto& lex = default_lexicon();
  const std::array<double, 3> sigmas{0.3, 1.5, 4.0};
  std::array<double, 3> mean{};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
      mean[s] += matched_accuracy(generate(96, lex, 2.0, sigmas[s], 500 + seed)) / 20.0;
    }
  }
  CHECK(mean[0] > 0.9);
  CHECK(mean[0] >= mean[1]);
  CHECK(mean[1] >= mean[2]);
}

TEST_CASE("predicted sign accuracy") {
  const auto& lex = default_lexicon();
  std::array<double, 5> observed{};
  std::array<double, 5> predicted{};
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto b = generate(208, lex, 2.0, 3.0, 300 + static_cast<std::uint64_t>(seed));
    const auto& t = b.truth;
    // Known bias removed, projected on the planted directions.
    const Eigen::MatrixXd proj =
        (b.matrix.values().rowwise() - t.frequency_bias.transpose()) * t.loadings;
    const auto L = label_matrix(b.corpus);
    const auto p = predicted_accuracy(t);
    for (auto trait : kAllTraits) {
      const int c = t.component_of(trait);
      const int k = index_of(trait);
      int hit = 0;
      for (Eigen::Index i = 0; i < proj.rows(); ++i) hit += (proj(i, c) >= 0.0) == (L(i, k) == 1);
      observed[static_cast<std::size_t>(k)] += hit / 208.0 / seeds;
      predicted[static_cast<std::size_t>(k)] += p[static_cast<std::size_t>(k)] / seeds;
    }
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(observed[static_cast<std::size_t>(k)] - predicted[static_cast<std::size_t>(k)]) <= 0.05);
  }
}

TEST_CASE("noise calibration") {
  const auto& lex = default_lexicon();
  Eigen::VectorXd scales(5);
  for (int c = 0; c < 5; ++c) scales(c) = 2.0 * std::pow(0.8, c);
  const double sigma = noise_for_explained_variance(208, lex.size(), 2.0, scales, 0.74);
  CHECK(sigma > 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = generate(208, lex, 2.0, sigma, seed);
    const auto d = svd(zero_center(b.matrix), 5);
    CHECK(std::abs(d.explained.cumulative(4) - 0.74) <= 0.05);
  }
  CHECK(noise_for_explained_variance(208, 100, 2.0, scales, 0.9) <
        noise_for_explained_variance(208, 100, 2.0, scales, 0.5));
  CHECK_THROWS_AS(noise_for_explained_variance(208, 5, 2.0, scales, 0.5), ValidationError);
  CHECK_THROWS_AS(noise_for_explained_variance(208, 100, 2.0, scales, 1.0), ValidationError);
}

TEST_CASE("bundle files") {
  const auto& lex = default_lexicon();
  const auto b = generate(20, lex, 2.0, 0.4, 2);
  testutil::TempDir dir("bundle");
  write_bundle(b, dir.path().string());
  const auto m = read_matrix(dir.file("matrix.tsv"));
  CHECK(m.values() == b.matrix.values());
  CHECK(m.provenance().corpus_hash == b.matrix.provenance().corpus_hash);
  CHECK(std::filesystem::exists(dir.file("corpus.jsonl")));
  const auto truth = planted_model_from_json(nlohmann::json::parse(testutil::slurp(dir.file("truth.json"))));
  CHECK(truth.loadings == b.truth.loadings);
  CHECK(truth.factor_scores == b.truth.factor_scores);
  CHECK(truth.component_traits == b.truth.component_traits);
  CHECK(truth.noise_sigma == b.truth.noise_sigma);
}
