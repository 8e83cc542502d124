#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "pobp/pobp.h"
#include "support/fixtures.h"

using nlohmann::json;

namespace {

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { pobp_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and default configuration are available") {
  REQUIRE(pobp_version() != nullptr);
  CHECK(std::strlen(pobp_version()) > 0);

  OwnedString cfg;
  cfg.ptr = pobp_default_config();
  REQUIRE(cfg.ptr != nullptr);
  json j = json::parse(cfg.str());
  CHECK(j["topics"] == 10);
  CHECK(j["lambda-w"] == 0.1);
  CHECK(j["seed"] == 42);
}

TEST_CASE("config layers merge with later values winning") {
  OwnedString first;
  REQUIRE(pobp_config_merge(nullptr, R"({"topics": 30, "seed": 5})",
                            &first.ptr) == POBP_OK);
  OwnedString second;
  REQUIRE(pobp_config_merge(first.ptr, R"({"seed": 11})", &second.ptr) ==
          POBP_OK);
  json j = json::parse(second.str());
  CHECK(j["topics"] == 30);
  CHECK(j["seed"] == 11);
  CHECK(j["beta"] == 0.01);  // untouched defaults ride along

  OwnedString bad;
  CHECK(pobp_config_merge(nullptr, R"({"wat": 1})", &bad.ptr) ==
        POBP_ERR_CONFIG);
  CHECK(std::strlen(pobp_last_error()) > 0);
  CHECK(pobp_config_merge(nullptr, "{]", &bad.ptr) == POBP_ERR_CONFIG);
  CHECK(pobp_config_merge(nullptr, nullptr, &bad.ptr) == POBP_ERR_CONFIG);
}

TEST_CASE("corpus handles expose the loaded dimensions") {
  auto dir = fixtures::scratch_dir("capi-corpus");
  auto paths = fixtures::write_uci(fixtures::micro(), dir);

  pobp_corpus* corpus = nullptr;
  REQUIRE(pobp_corpus_load(paths.docword.c_str(), paths.vocab.c_str(),
                           &corpus) == POBP_OK);
  REQUIRE(corpus != nullptr);
  pobp_corpus_info info{};
  REQUIRE(pobp_corpus_info_get(corpus, &info) == POBP_OK);
  CHECK(info.documents == 2);
  CHECK(info.vocabulary == 3);
  CHECK(info.nnz == 4);
  CHECK(info.tokens == 7);
  pobp_corpus_free(corpus);

  pobp_corpus* nope = nullptr;
  CHECK(pobp_corpus_load("/definitely/not/here.txt", paths.vocab.c_str(),
                         &nope) == POBP_ERR_IO);
  CHECK(nope == nullptr);
  CHECK(std::strlen(pobp_last_error()) > 0);
  CHECK(pobp_corpus_load(nullptr, paths.vocab.c_str(), &nope) ==
        POBP_ERR_CONFIG);
  CHECK(pobp_corpus_info_get(nullptr, &info) == POBP_ERR_CONFIG);
}

TEST_CASE("training through the C interface writes the report") {
  auto dir = fixtures::scratch_dir("capi-train");
  auto paths = fixtures::write_uci(fixtures::desk(), dir);
  const std::string out_dir = dir + "/run";
  const char* cfg =
      R"({"topics": 5, "max-iters": 4, "minibatch-target-nnz": 20000,
          "per-batch-eval": false, "truncate-vocab": 400, "seed": 3})";

  OwnedString report;
  REQUIRE(pobp_train(paths.docword.c_str(), paths.vocab.c_str(),
                     out_dir.c_str(), cfg, &report.ptr) == POBP_OK);
  json j = json::parse(report.str());
  CHECK(j["corpus"]["vocabulary"] == 400);
  CHECK(j["config"]["topics"] == 5);
  CHECK(std::ifstream(out_dir + "/phi_hat.bin").good());

  // a report is optional
  REQUIRE(pobp_train(paths.docword.c_str(), paths.vocab.c_str(),
                     (dir + "/run2").c_str(), cfg, nullptr) == POBP_OK);

  CHECK(pobp_train(nullptr, paths.vocab.c_str(), out_dir.c_str(), cfg,
                   nullptr) == POBP_ERR_CONFIG);
  CHECK(pobp_train(paths.docword.c_str(), paths.vocab.c_str(), out_dir.c_str(),
                   R"({"topics": 0})", nullptr) == POBP_ERR_CONFIG);
  CHECK(pobp_train(paths.docword.c_str(), paths.vocab.c_str(), out_dir.c_str(),
                   R"({"test-fraction": 2.0})", nullptr) == POBP_ERR_CONFIG);
}

TEST_CASE("evaluation through the C interface returns the perplexity") {
  auto dir = fixtures::scratch_dir("capi-eval");
  auto paths = fixtures::write_uci(fixtures::desk(), dir);
  const char* train_cfg =
      R"({"topics": 5, "max-iters": 4, "minibatch-target-nnz": 20000,
          "per-batch-eval": false, "truncate-vocab": 400, "seed": 3})";
  REQUIRE(pobp_train(paths.docword.c_str(), paths.vocab.c_str(),
                     (dir + "/run").c_str(), train_cfg, nullptr) == POBP_OK);

  const char* eval_cfg =
      R"({"truncate-vocab": 400, "fold-in-iters": 20, "eval-docs": 100,
          "seed": 3})";
  double ppx = 0.0;
  OwnedString report;
  REQUIRE(pobp_evaluate((dir + "/run/phi_hat.bin").c_str(),
                        paths.docword.c_str(), paths.vocab.c_str(),
                        (dir + "/eval").c_str(), eval_cfg, &ppx,
                        &report.ptr) == POBP_OK);
  CHECK(ppx > 1.0);
  CHECK(ppx < 400.0);
  json j = json::parse(report.str());
  CHECK(j["perplexity"] == doctest::Approx(ppx));

  CHECK(pobp_evaluate("/missing.bin", paths.docword.c_str(),
                      paths.vocab.c_str(), (dir + "/e2").c_str(), eval_cfg,
                      &ppx, nullptr) == POBP_ERR_IO);
  CHECK(pobp_evaluate(nullptr, paths.docword.c_str(), paths.vocab.c_str(),
                      (dir + "/e3").c_str(), eval_cfg, &ppx, nullptr) ==
        POBP_ERR_CONFIG);
}

TEST_CASE("the cost model answers through the C interface") {
  OwnedString report;
  REQUIRE(pobp_cost_model(R"({"comp-cost": 9, "comm-cost": 1})",
                          &report.ptr) == POBP_OK);
  json j = json::parse(report.str());
  CHECK(j["optimal-workers"] == doctest::Approx(3.0));
  CHECK(j["min-overall-cost"] == doctest::Approx(6.0));

  OwnedString bad;
  CHECK(pobp_cost_model(R"({"wat": 1})", &bad.ptr) == POBP_ERR_CONFIG);
  CHECK(pobp_cost_model(nullptr, &bad.ptr) == POBP_ERR_CONFIG);
  CHECK(pobp_cost_model(R"({"comp-cost": 9})", &bad.ptr) == POBP_ERR_CONFIG);
}

TEST_CASE("diagnosis through the C interface mirrors the library behaviour") {
  auto dir = fixtures::scratch_dir("capi-diag");
  std::ofstream(dir + "/wr.csv") << "word,residual\n1,6\n2,3\n3,1\n";
  const std::string request = std::string(R"({"word-residuals": ")") +
                              dir + R"(/wr.csv", "out-dir": ")" + dir +
                              R"(/out", "fractions": [1.0]})";
  OwnedString report;
  REQUIRE(pobp_diagnose(request.c_str(), &report.ptr) == POBP_OK);
  json j = json::parse(report.str());
  REQUIRE(j["top-shares"].size() == 1);
  CHECK(j["top-shares"][0]["share"] == doctest::Approx(1.0));

  OwnedString bad;
  CHECK(pobp_diagnose(nullptr, &bad.ptr) == POBP_ERR_CONFIG);
  CHECK(pobp_diagnose(R"({"out-dir": "x"})", &bad.ptr) == POBP_ERR_CONFIG);
  const std::string missing = std::string(R"({"word-residuals": ")") + dir +
                              R"(/absent.csv", "out-dir": ")" + dir +
                              R"(/out2"})";
  CHECK(pobp_diagnose(missing.c_str(), &bad.ptr) == POBP_ERR_IO);
}

}  // TEST_SUITE
