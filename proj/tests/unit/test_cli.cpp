#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lexifactor/error.hpp"
#include "lexifactor/cli.hpp"
#include "lexifactor/matrix.hpp"
#include "test_util.hpp"

using namespace lexifactor;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

int shell_status(const std::string& command) {
  const int raw = std::system((command + " >/dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

const std::string kSource = LEXIFACTOR_SOURCE_DIR;

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  const auto missing = run({"probe", "--backend", "mock"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--dataset") != std::string::npos);
  CHECK(run({"probe", "--dataset", "/nonexistent/stories.jsonl", "--mock-spec", "x"}).code != 0);
  CHECK(run({"report"}).code == 2);

  SUBCASE("the installed executable") {
    const std::string exe = LEXIFACTOR_CLI;
    CHECK(shell_status(exe + " --help") == 0);
    CHECK(shell_status(exe + " probe") == 2);
    CHECK(shell_status(exe + " assess --matrix /nonexistent.tsv --dataset /nonexistent.jsonl") != 0);
  }
}

TEST_CASE("synth, probe, analyze, assess round trip") {
  testutil::TempDir dir("cli");
  const auto d = dir.path().string();
  const auto syn = run({"synth", "--stories", "40", "--seed", "3", "--out-dir", d + "/syn"});
  REQUIRE(syn.code == 0);
  CHECK(syn.out.find("expected sign accuracy") != std::string::npos);
  for (const char* f : {"corpus.jsonl", "matrix.tsv", "matrix.tsv.meta.json", "truth.json", "mock_spec.json"}) {
    CHECK(std::filesystem::exists(d + "/syn/" + f));
  }

  const std::vector<std::string> probe_args{"probe", "--backend", "mock", "--dataset", d + "/syn/corpus.jsonl",
                                            "--mock-spec", d + "/syn/mock_spec.json", "--out-dir", d + "/probe",
                                            "--concurrency", "3"};
  const auto first = run(probe_args);
  REQUIRE(first.code == 0);
  CHECK(first.out.find("4000 backend calls, 0 cache hits") != std::string::npos);
  const auto matrix_bytes = testutil::slurp(d + "/probe/matrix.tsv");
  const auto probed = read_matrix(d + "/probe/matrix.tsv");
  const auto planted = read_matrix(d + "/syn/matrix.tsv");
  CHECK((probed.values() - planted.values()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(probed.provenance().model == "synthetic-mock");

  const auto again = run(probe_args);
  REQUIRE(again.code == 0);
  CHECK(again.out.find("0 backend calls, 4000 cache hits") != std::string::npos);
  CHECK(testutil::slurp(d + "/probe/matrix.tsv") == matrix_bytes);

  SUBCASE("analyze") {
    const auto too_big = run({"analyze", "--matrix", d + "/probe/matrix.tsv", "-k", "101", "--out-dir", d + "/an"});
    CHECK(too_big.code == 2);
    CHECK(too_big.err.find("min(N, D)") != std::string::npos);
    const auto an = run({"analyze", "--matrix", d + "/probe/matrix.tsv", "--dataset", d + "/syn/corpus.jsonl",
                         "--out-dir", d + "/an"});
    REQUIRE(an.code == 0);
    CHECK(an.out.find("alignment: 1->+EXT") != std::string::npos);
    for (const char* f : {"decomposition.json", "scree.tsv", "scree.svg", "loadings.md", "alignment.json", "accuracy.md"}) {
      CHECK(std::filesystem::exists(d + "/an/" + f));
    }
  }
  SUBCASE("assess is reproducible byte for byte") {
    auto args = [&](const std::string& out) {
      return std::vector<std::string>{"assess", "--matrix", d + "/probe/matrix.tsv", "--dataset",
                                      d + "/syn/corpus.jsonl", "--seed", "7", "--lambda-grid", "log:6:1e-2",
                                      "--folds", "3", "--out-dir", out};
    };
    const auto a = run(args(d + "/as1"));
    const auto b = run(args(d + "/as2"));
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out.find("24 train / 16 test") != std::string::npos);
    for (const char* f : {"report.json", "report.md", "accuracy.md"}) {
      CHECK(testutil::slurp(d + "/as1/" + f) == testutil::slurp(d + "/as2/" + f));
    }
    const auto report = nlohmann::json::parse(testutil::slurp(d + "/as1/report.json"));
    CHECK(report["test_ids"].size() == 16);
    CHECK(report["lasso_models"].size() == 5);
    CHECK(report["protocol"]["seed"] == 7);

    const auto rendered = run({"report", "--reports", d + "/as1/report.json"});
    CHECK(rendered.code == 0);
    CHECK(rendered.out == testutil::slurp(d + "/as1/report.md"));
  }
  SUBCASE("assess refuses an unlabeled corpus") {
    std::istringstream lines(testutil::slurp(d + "/syn/corpus.jsonl"));
    std::string line, stripped;
    while (std::getline(lines, line)) {
      auto j = nlohmann::json::parse(line);
      j.erase("labels");
      stripped += j.dump() + "\n";
    }
    testutil::spit(d + "/unlabeled.jsonl", stripped);
    const auto r = run({"assess", "--matrix", d + "/probe/matrix.tsv", "--dataset", d + "/unlabeled.jsonl",
                        "--out-dir", d + "/as3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("labels") != std::string::npos);
  }
}

TEST_CASE("config file with flag override") {
  testutil::TempDir dir("cfg");
  const auto d = dir.path().string();
  nlohmann::json cfg = {{"stories", 12}, {"seed", 4}, {"output_dir", d + "/out"}, {"noise_sigma", 0.5}};
  testutil::spit(d + "/cfg.json", cfg.dump());
  const auto r = run({"synth", "--config", d + "/cfg.json", "--seed", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("synth: 12 stories") != std::string::npos);
  CHECK(r.out.find("noise sigma 0.500000 (seed 5)") != std::string::npos);
  CHECK(std::filesystem::exists(d + "/out/matrix.tsv"));

  cfg["colour"] = "blue";
  testutil::spit(d + "/bad.json", cfg.dump());
  const auto bad = run({"synth", "--config", d + "/bad.json"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("colour") != std::string::npos);
}

TEST_CASE("report command renders reference tables") {
  testutil::TempDir dir("report");
  const auto t1 = testutil::slurp(kSource + "/tests/golden/table1.md");
  const auto t5 = testutil::slurp(kSource + "/tests/golden/table5.md");
  const auto rows = run({"report", "--reports", kSource + "/tests/fixtures/table1_rows.json"});
  CHECK(rows.code == 0);
  CHECK(rows.out == t1);
  const auto grid = run({"report", "--alignment", kSource + "/tests/fixtures/table5_accuracy.json"});
  CHECK(grid.code == 0);
  CHECK(grid.out == t5);
  const auto both = run({"report", "--reports", kSource + "/tests/fixtures/table1_rows.json", "--alignment",
                         kSource + "/tests/fixtures/table5_accuracy.json", "--out", dir.file("t.md")});
  CHECK(both.code == 0);
  CHECK(testutil::slurp(dir.file("t.md")) == t1 + "\n" + t5);
}
