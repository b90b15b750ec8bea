#include <doctest.h>

#include <cmath>
#include <thread>

#include "lexifactor/error.hpp"
#include "lexifactor/mock_backend.hpp"
#include "lexifactor/rng.hpp"

using namespace lexifactor;

namespace {

MockSpec sophisticated_spec() {
  MockSpec spec;
  spec.vocabulary = {"s", "oph", "istic", "ated", "x"};
  spec.tokenizer["sophisticated"] = {"s", "oph", "istic", "ated"};
  return spec;
}

double exp_sum(const std::map<std::string, double>& d) {
  double s = 0.0;
  for (const auto& kv : d) s += std::exp(kv.second);
  return s;
}

ScoreRequest request(std::string prompt, std::string continuation, double t = 1.0) {
  ScoreRequest r;
  r.prompt = std::move(prompt);
  r.continuation = std::move(continuation);
  r.temperature = t;
  return r;
}

}  // namespace

TEST_CASE("request validation") {
  MockBackend mock(sophisticated_spec(), 1);
  CHECK_THROWS_AS(mock.score(request("p", "")), ValidationError);
  CHECK_THROWS_AS(mock.score(request("p", "s", 0.0)), ValidationError);
  CHECK_THROWS_AS(mock.score(request("p", "s", std::nan(""))), ValidationError);
}

TEST_CASE("multi-token word follows the tokenizer table") {
  MockBackend mock(sophisticated_spec(), 7);
  const auto r = mock.score(request("Essay: hi\"", "sophisticated"));
  REQUIRE(r.tokens.size() == 4);
  CHECK(r.tokens[0].token == "s");
  CHECK(r.tokens[1].token == "oph");
  CHECK(r.tokens[2].token == "istic");
  CHECK(r.tokens[3].token == "ated");
  // Each position is a log-softmax of the logits conditioned on the prefix.
  std::string prefix;
  for (const auto& t : r.tokens) {
    const auto logits = mock.logits_at("Essay: hi\"", prefix);
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    const auto idx = std::find(mock.spec().vocabulary.begin(), mock.spec().vocabulary.end(), t.token) -
                     mock.spec().vocabulary.begin();
    CHECK(t.logprob == doctest::Approx(logits[static_cast<std::size_t>(idx)] - std::log(z)).epsilon(1e-12));
    prefix += t.token;
  }
}

TEST_CASE("uniform vocabulary gives ln(1/4)") {
  MockSpec spec;
  spec.vocabulary = {"a", "b", "c", "d"};
  spec.default_logits = std::vector<double>{0.3, 0.3, 0.3, 0.3};
  MockBackend mock(spec, 0);
  const auto r = mock.score(request("p", "c"));
  REQUIRE(r.tokens.size() == 1);
  CHECK(r.tokens[0].logprob == doctest::Approx(std::log(0.25)).epsilon(1e-14));
}

TEST_CASE("planted logits [2, 1, 0]") {
  MockSpec spec;
  spec.vocabulary = {"a", "b", "c"};
  spec.default_logits = std::vector<double>{2.0, 1.0, 0.0};
  MockBackend mock(spec, 0);
  const double expected = 2.0 - std::log(std::exp(2.0) + std::exp(1.0) + 1.0);
  const auto r = mock.score(request("anything", "a"));
  CHECK(r.tokens[0].logprob == doctest::Approx(expected).epsilon(1e-14));
  SUBCASE("temperature divides the logits") {
    const auto hot = mock.score(request("anything", "a", 2.0));
    const double e = 1.0 - std::log(std::exp(1.0) + std::exp(0.5) + 1.0);
    CHECK(hot.tokens[0].logprob == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("context logits: sparse and dense forms") {
  MockSpec spec;
  spec.vocabulary = {"a", "b", "c"};
  spec.context_logits[context_key("P", "")] = SparseLogits{{{"a", 1.0}}, -1.0};
  MockBackend mock(spec, 0);
  const auto lp = mock.logits_at("P", "");
  CHECK(lp == std::vector<double>{1.0, -1.0, -1.0});
  // Unlisted contexts fall through to seeded logits in [-4, 4].
  const auto other = mock.logits_at("Q", "");
  for (double l : other) CHECK(std::abs(l) <= 4.0);

  const auto j = to_json(spec);
  CHECK(to_json(mock_spec_from_json(j)) == j);
  nlohmann::json dense = j;
  dense["context_logits"][context_key("P", "")] = {1.0, -1.0, -1.0};
  CHECK(MockBackend(mock_spec_from_json(dense), 0).logits_at("P", "") == lp);
  dense["context_logits"][context_key("P", "")] = {1.0};
  CHECK_THROWS_AS(mock_spec_from_json(dense), ValidationError);
}

TEST_CASE("spec validation") {
  MockSpec spec;
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
  spec.vocabulary = {"a", "a"};
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
  spec.vocabulary = {"a", "b"};
  spec.tokenizer["ab"] = {"a", "c"};
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
  spec.tokenizer["ab"] = {"b", "a"};
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
  spec.tokenizer.clear();
  spec.default_logits = std::vector<double>{1.0};
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
  spec.default_logits.reset();
  spec.context_logits["k"] = SparseLogits{{{"zz", 1.0}}, 0.0};
  CHECK_THROWS_AS(MockBackend(spec, 0), ValidationError);
}

TEST_CASE("unknown symbols and greedy fallback") {
  MockSpec spec;
  spec.vocabulary = {"a", "ab", "b", "abc"};
  MockBackend mock(spec, 3);
  CHECK(mock.tokenize("abcab") == std::vector<std::string>{"abc", "ab"});
  try {
    mock.score(request("p", "abz"));
    FAIL("expected an unknown-symbol error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::kUnknownSymbol);
  }
}

TEST_CASE("property: determinism, coverage and completeness") {
  Rng rng(2024);
  MockSpec spec;
  spec.vocabulary = {"a", "b", "c", "ab", "bc", "cab", " "};
  MockBackend first(spec, 99);
  MockBackend second(spec, 99);
  MockBackend other_seed(spec, 100);
  const std::string letters = "abc ";
  int differ = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::string prompt = "story " + std::to_string(rng.below(1000)) + " \"";
    std::string cont;
    const auto len = 1 + rng.below(8);
    for (std::uint64_t i = 0; i < len; ++i) cont.push_back(letters[rng.below(letters.size())]);
    auto req = request(prompt, cont, 0.25 + 3.75 * rng.uniform());
    const auto r1 = first.score(req);
    const auto r2 = second.score(req);
    CHECK(r1 == r2);
    CHECK(first.score(req) == r1);
    std::string joined;
    for (const auto& t : r1.tokens) {
      joined += t.token;
      REQUIRE(t.alternatives.has_value());
      CHECK(t.complete);
      CHECK(std::abs(exp_sum(*t.alternatives) - 1.0) <= 1e-6);
      CHECK(t.alternatives->at(t.token) == t.logprob);
      CHECK(t.logprob <= 1e-12);
    }
    CHECK(joined == cont);
    differ += other_seed.score(req) != r1;
  }
  CHECK(differ > 250);
}

TEST_CASE("concurrent calls match sequential ones") {
  MockSpec spec;
  spec.vocabulary = {"a", "b", "c"};
  MockBackend mock(spec, 5);
  std::vector<ScoreResponse> expected;
  for (int i = 0; i < 64; ++i) expected.push_back(mock.score(request("p" + std::to_string(i), "abcab")));
  std::vector<ScoreResponse> got(64);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = t; i < 64; i += 4) got[static_cast<std::size_t>(i)] = mock.score(request("p" + std::to_string(i), "abcab"));
    });
  }
  for (auto& th : threads) th.join();
  CHECK(got == expected);
}
