#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cluster.h"
#include "corpus.h"
#include "costmodel.h"
#include "diagnostics.h"
#include "doctest.h"
#include "driver.h"
#include "eval.h"
#include "errors.h"
#include "json.hpp"
#include "matrix.h"
#include "modelio.h"
#include "rng.h"
#include "support/fixtures.h"

using namespace pobp;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  return path;
}

bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

// 120 documents over an 80-word vocabulary with two loose themes, enough
// structure for held-out scores to move and small enough to train in
// milliseconds.
fixtures::UciPaths medium_corpus_files(const std::string& dir) {
  SparseCorpus c;
  c.num_docs = 120;
  c.vocab_size = 80;
  for (uint32_t w = 0; w < 80; ++w) c.vocab.push_back("tok" + std::to_string(w));
  for (uint32_t d = 0; d < 120; ++d) {
    KeyedRng rng(31337, 0x6d6564, d, 0);
    const bool theme_a = (rng.uniform01() < 0.5);
    std::map<uint32_t, uint32_t> row;
    const uint32_t picks = 12 + static_cast<uint32_t>(rng.below(8));
    for (uint32_t i = 0; i < picks; ++i) {
      uint32_t w;
      if (rng.uniform01() < 0.8)
        w = (theme_a ? 0 : 40) + static_cast<uint32_t>(rng.below(40));
      else
        w = static_cast<uint32_t>(rng.below(80));
      row[w] += 1 + static_cast<uint32_t>(rng.below(3));
    }
    for (const auto& [w, x] : row) {
      c.entries.push_back({d, w, x});
      c.num_tokens += x;
    }
  }
  return fixtures::write_uci(c, dir);
}

RunSettings quick_settings() {
  RunSettings s;
  s.topics = 6;
  s.minibatch_target_nnz = 600;
  s.max_iters = 8;
  s.epsilon = 1e-3;
  s.fold_in_iters = 30;
  s.seed = 4242;
  return s;
}

}  // namespace

TEST_SUITE("model_driver") {

TEST_CASE("model files round-trip bit for bit") {
  Matrix wt(3, 2);
  wt(0, 0) = 1.25;
  wt(0, 1) = -0.0;
  wt(1, 0) = 3.141592653589793;
  wt(1, 1) = 1e-300;
  wt(2, 0) = 0.1;
  wt(2, 1) = 7.0;
  auto dir = fixtures::scratch_dir("modelio");
  save_model(dir + "/m.bin", wt);
  Matrix back = load_model(dir + "/m.bin");
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  for (size_t w = 0; w < 3; ++w)
    for (size_t k = 0; k < 2; ++k) CHECK(back(w, k) == wt(w, k));
}

TEST_CASE("model loading rejects damaged files") {
  auto dir = fixtures::scratch_dir("modelio-bad");
  CHECK_THROWS_AS(load_model(dir + "/absent.bin"), IoError);

  Matrix wt(2, 2, 1.0);
  save_model(dir + "/m.bin", wt);
  auto bytes = slurp(dir + "/m.bin");

  std::ofstream(dir + "/short.bin", std::ios::binary)
      << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_model(dir + "/short.bin"), ParseError);

  std::ofstream(dir + "/long.bin", std::ios::binary) << bytes << "x";
  CHECK_THROWS_AS(load_model(dir + "/long.bin"), ParseError);

  std::ofstream(dir + "/stub.bin", std::ios::binary) << "ab";
  CHECK_THROWS_AS(load_model(dir + "/stub.bin"), ParseError);
}

TEST_CASE("settings survive a JSON round trip") {
  RunSettings d;
  CHECK(settings_from_json(settings_to_json(d)) == d);
  CHECK(settings_from_json("{}") == d);

  RunSettings s;
  s.topics = 25;
  s.alpha = 0.4;
  s.beta = 0.02;
  s.lambda_w = 0.3;
  s.lambda_k_times_k = 7;
  s.minibatch_target_nnz = 1234;
  s.num_workers = 3;
  s.seed = 99;
  s.epsilon = 5e-4;
  s.max_iters = 17;
  s.test_fraction = 0.25;
  s.fold_in_iters = 12;
  s.eval_docs = 55;
  s.per_batch_eval = false;
  s.checkpoint_eval = true;
  s.serial_workers = true;
  s.truncate_vocab = 500;
  CHECK(settings_from_json(settings_to_json(s)) == s);

  // keys are kebab-case on the wire
  auto text = settings_to_json(s);
  CHECK(text.find("lambda-w") != std::string::npos);
  CHECK(text.find("minibatch-target-nnz") != std::string::npos);
  CHECK(text.find("_") == std::string::npos);
}

TEST_CASE("settings parsing is strict about keys and types") {
  CHECK_THROWS_AS(settings_from_json(R"({"topicz": 3})"), ConfigError);
  CHECK_THROWS_AS(settings_from_json(R"({"topics": "many"})"), ConfigError);
  CHECK_THROWS_AS(settings_from_json(R"({"topics": -4})"), ConfigError);
  CHECK_THROWS_AS(settings_from_json(R"({"per-batch-eval": 1})"), ConfigError);
  CHECK_THROWS_AS(settings_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(settings_from_json("{nope"), ConfigError);
}

TEST_CASE("an infinite epsilon survives the JSON round trip") {
  RunSettings s = settings_from_json(R"({"epsilon": "inf"})");
  CHECK(std::isinf(s.epsilon));
  auto text = settings_to_json(s);
  CHECK(text.find("\"inf\"") != std::string::npos);
  CHECK(std::isinf(settings_from_json(text).epsilon));
  CHECK_THROWS_AS(settings_from_json(R"({"epsilon": "soon"})"), ConfigError);
}

TEST_CASE("later settings layers override earlier ones key by key") {
  RunSettings file = settings_from_json(R"({"topics": 25, "seed": 7})");
  RunSettings flags = settings_from_json(R"({"seed": 9})", file);
  CHECK(flags.topics == 25);
  CHECK(flags.seed == 9);
  CHECK(flags.beta == RunSettings{}.beta);
}

TEST_CASE("held-out scoring of a flat model gives vocabulary-sized perplexity") {
  SparseCorpus c = fixtures::micro();
  SparseCorpus fold = c;
  SparseCorpus test = c;  // scoring the same cells is fine for a flat model
  Matrix zeros(3, 2);
  Hyperparams hp{2, 0.5, 0.01};
  EvalResult r = evaluate_split(fold, test, zeros, hp, 10, 1);
  CHECK(r.perplexity == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.eval_docs == 2);
  CHECK(r.test_tokens == c.num_tokens);
}

TEST_CASE("the evaluation document cap keeps only the first documents") {
  SparseCorpus c = fixtures::micro();
  Matrix zeros(3, 2);
  Hyperparams hp{2, 0.5, 0.01};
  EvalResult r = evaluate_split(c, c, zeros, hp, 10, 1, 1);
  CHECK(r.eval_docs == 1);
  CHECK(r.test_tokens == 3);  // document 0 holds three tokens

  SparseCorpus none = c;
  none.entries.clear();
  none.num_tokens = 0;
  CHECK_THROWS_AS(evaluate_split(c, none, zeros, hp, 10, 1), NumericError);
}

TEST_CASE("training writes the advertised artifacts and reports") {
  auto dir = fixtures::scratch_dir("train-run");
  auto paths = medium_corpus_files(dir);
  RunSettings s = quick_settings();

  TrainOutcome out = train_run(paths.docword, paths.vocab, dir + "/run", s);
  CHECK(out.batches >= 2);
  CHECK(out.iterations >= out.batches);
  CHECK(out.ledger_bytes > 0);
  REQUIRE(out.final_perplexity.has_value());
  CHECK(*out.final_perplexity < 80.0);  // beats the uniform baseline

  for (const char* name :
       {"report.json", "phi_hat.bin", "phi.bin", "ledger.csv",
        "residual_trace.csv", "word_residuals.csv", "perplexity_batches.csv"})
    CHECK(file_exists(dir + "/run/" + std::string(name)));

  json report = json::parse(out.report_json);
  CHECK(report["corpus"]["documents"] == 120);
  CHECK(report["corpus"]["vocabulary"] == 80);
  CHECK(report["config"]["topics"] == 6);
  CHECK(report["config"]["alpha"] == doctest::Approx(2.0 / 6.0));
  CHECK(report["batches"].size() == out.batches);
  CHECK(report["counters"]["iterations-total"] == out.iterations);
  CHECK(report["ledger"]["total-bytes"] == out.ledger_bytes);
  CHECK(report["artifacts"]["model"] == "phi_hat.bin");

  // the traces parse back with the documented schemas
  auto trace = read_trace_csv(dir + "/run/residual_trace.csv", "mean_residual");
  CHECK(trace.size() == out.iterations);
  auto residuals = read_word_residuals_csv(dir + "/run/word_residuals.csv");
  CHECK(residuals.size() == 80);

  // the normalized topics file really holds unit columns
  Matrix phi = load_model(dir + "/run/phi.bin");
  REQUIRE(phi.rows() == 80);
  REQUIRE(phi.cols() == 6);
  for (size_t k = 0; k < 6; ++k) {
    double col = 0.0;
    for (size_t w = 0; w < 80; ++w) col += phi(w, k);
    CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("two identical training runs leave byte-identical artifacts") {
  auto dir = fixtures::scratch_dir("train-det");
  auto paths = medium_corpus_files(dir);
  RunSettings s = quick_settings();
  s.num_workers = 2;

  train_run(paths.docword, paths.vocab, dir + "/a", s);
  train_run(paths.docword, paths.vocab, dir + "/b", s);
  CHECK(slurp(dir + "/a/phi_hat.bin") == slurp(dir + "/b/phi_hat.bin"));
  CHECK(slurp(dir + "/a/phi.bin") == slurp(dir + "/b/phi.bin"));
  CHECK(slurp(dir + "/a/ledger.csv") == slurp(dir + "/b/ledger.csv"));
  CHECK(slurp(dir + "/a/residual_trace.csv") ==
        slurp(dir + "/b/residual_trace.csv"));
}

TEST_CASE("training without a test split skips evaluation quietly") {
  auto dir = fixtures::scratch_dir("train-nosplit");
  auto paths = medium_corpus_files(dir);
  RunSettings s = quick_settings();
  s.test_fraction = 0.0;

  TrainOutcome out = train_run(paths.docword, paths.vocab, dir + "/run", s);
  CHECK_FALSE(out.final_perplexity.has_value());
  CHECK_FALSE(file_exists(dir + "/run/perplexity_batches.csv"));
  json report = json::parse(out.report_json);
  CHECK(report["corpus"]["test-tokens"] == 0);
}

TEST_CASE("evaluation scores a stored model against held-out tokens") {
  auto dir = fixtures::scratch_dir("eval-run");
  auto paths = medium_corpus_files(dir);
  RunSettings s = quick_settings();

  // a flat stored model scores exactly at the uniform baseline
  Matrix zeros(80, 6);
  save_model(dir + "/uniform.bin", zeros);
  EvalOutcome uniform =
      evaluate_run(dir + "/uniform.bin", paths.docword, paths.vocab,
                   dir + "/eval-uniform", s);
  CHECK(uniform.perplexity == doctest::Approx(80.0).epsilon(1e-9));
  CHECK(uniform.eval_docs > 0);
  CHECK(file_exists(dir + "/eval-uniform/eval_report.json"));

  // a trained model beats it
  train_run(paths.docword, paths.vocab, dir + "/run", s);
  EvalOutcome trained =
      evaluate_run(dir + "/run/phi_hat.bin", paths.docword, paths.vocab,
                   dir + "/eval-trained", s);
  CHECK(trained.perplexity < uniform.perplexity);
  json report = json::parse(trained.report_json);
  CHECK(report["perplexity"] == doctest::Approx(trained.perplexity));
  CHECK(report["test-tokens"] == trained.test_tokens);
  CHECK(report["evaluated-documents"] == trained.eval_docs);
}

TEST_CASE("evaluating a model against the wrong vocabulary fails clearly") {
  auto dir = fixtures::scratch_dir("eval-mismatch");
  auto paths = medium_corpus_files(dir);
  RunSettings s = quick_settings();
  Matrix wrong(33, 6);
  save_model(dir + "/wrong.bin", wrong);
  try {
    evaluate_run(dir + "/wrong.bin", paths.docword, paths.vocab, dir + "/e", s);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("vocabulary mismatch") != std::string::npos);
    CHECK(msg.find("80") != std::string::npos);
    CHECK(msg.find("33") != std::string::npos);
  }

  RunSettings bad = s;
  bad.test_fraction = 0.0;  // evaluation needs a real held-out slice
  save_model(dir + "/ok.bin", Matrix(80, 6));
  CHECK_THROWS_AS(
      evaluate_run(dir + "/ok.bin", paths.docword, paths.vocab, dir + "/e2", bad),
      ConfigError);
}

TEST_CASE("diagnosis ranks residual mass and reports top shares") {
  auto dir = fixtures::scratch_dir("diag");
  // four words holding 70/20/8/2 percent of the mass
  write_text(dir + "/wr.csv", "word,residual\n1,70\n2,20\n3,8\n4,2\n");

  DiagnoseRequest req;
  req.word_residuals_path = dir + "/wr.csv";
  req.out_dir = dir + "/out";
  req.fractions = {0.25, 0.5, 1.0};
  DiagnoseOutcome out = diagnose_run(req);
  CHECK_FALSE(out.converged);
  REQUIRE(out.shares.size() == 3);
  CHECK(out.shares[0].share == doctest::Approx(0.70));
  CHECK(out.shares[1].share == doctest::Approx(0.90));
  CHECK(out.shares[2].share == doctest::Approx(1.0));
  CHECK(file_exists(dir + "/out/rank_curve.csv"));
  CHECK(file_exists(dir + "/out/topshare.csv"));
  CHECK(file_exists(dir + "/out/diagnose_report.json"));
  CHECK_FALSE(out.residual_perplexity_correlation.has_value());
}

TEST_CASE("an all-zero residual table reports convergence instead of ranking") {
  auto dir = fixtures::scratch_dir("diag-zero");
  write_text(dir + "/wr.csv", "word,residual\n1,0\n2,0\n");
  DiagnoseRequest req;
  req.word_residuals_path = dir + "/wr.csv";
  req.out_dir = dir + "/out";
  DiagnoseOutcome out = diagnose_run(req);
  CHECK(out.converged);
  CHECK(out.shares.empty());
  json report = json::parse(out.report_json);
  CHECK(report["converged"] == true);
}

TEST_CASE("paired traces yield a rank correlation") {
  auto dir = fixtures::scratch_dir("diag-corr");
  write_text(dir + "/wr.csv", "word,residual\n1,5\n2,3\n");
  // monotone pairing: higher residual, higher perplexity
  write_text(dir + "/res.csv",
             "minibatch,iteration,mean_residual\n1,1,0.9\n1,2,0.5\n1,3,0.2\n"
             "2,1,0.8\n2,2,0.1\n");
  write_text(dir + "/ppx.csv",
             "minibatch,iteration,perplexity\n1,1,900\n1,2,500\n1,3,200\n"
             "2,1,800\n2,2,100\n");

  DiagnoseRequest req;
  req.word_residuals_path = dir + "/wr.csv";
  req.residual_trace_path = dir + "/res.csv";
  req.perplexity_trace_path = dir + "/ppx.csv";
  req.out_dir = dir + "/out";
  DiagnoseOutcome out = diagnose_run(req);
  REQUIRE(out.residual_perplexity_correlation.has_value());
  CHECK(*out.residual_perplexity_correlation == doctest::Approx(1.0));

  // restricting to one mini-batch still pairs enough points
  req.minibatch = 1;
  req.out_dir = dir + "/out2";
  DiagnoseOutcome only1 = diagnose_run(req);
  REQUIRE(only1.residual_perplexity_correlation.has_value());

  // a single shared point is not a correlation
  req.minibatch = 9;
  req.out_dir = dir + "/out3";
  CHECK_THROWS_AS(diagnose_run(req), NumericError);
}

TEST_CASE("diagnosis requests parse from JSON with strict keys") {
  DiagnoseRequest req = diagnose_request_from_json(
      R"({"word-residuals": "wr.csv", "out-dir": "o",
          "fractions": [0.1, 0.5], "minibatch": 2})");
  CHECK(req.word_residuals_path == "wr.csv");
  CHECK(req.out_dir == "o");
  CHECK(req.fractions == std::vector<double>{0.1, 0.5});
  CHECK(req.minibatch == 2);
  CHECK_THROWS_AS(diagnose_request_from_json(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(diagnose_request_from_json(R"({"out-dir": "o"})"), ConfigError);
}

TEST_CASE("residual tables key rows by their 1-based word id") {
  auto dir = fixtures::scratch_dir("diag-badfile");
  write_text(dir + "/wr.csv", "word,residual\n2,5\n1,3\n");  // order-free
  auto totals = read_word_residuals_csv(dir + "/wr.csv");
  CHECK(totals == std::vector<double>{3.0, 5.0});
  write_text(dir + "/wr0.csv", "word,residual\n0,5\n");
  CHECK_THROWS_AS(read_word_residuals_csv(dir + "/wr0.csv"), ParseError);
  write_text(dir + "/wrx.csv", "word,wrong\n1,5\n");
  CHECK_THROWS_AS(read_word_residuals_csv(dir + "/wrx.csv"), ParseError);
}

TEST_CASE("rank correlation handles ties and rejects degenerate series") {
  std::vector<double> up = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> down = {9.0, 7.0, 5.0, 3.0};
  std::vector<double> scaled = {10.0, 20.0, 30.0, 40.0};
  CHECK(spearman_rank_correlation(up, scaled) == doctest::Approx(1.0));
  CHECK(spearman_rank_correlation(up, down) == doctest::Approx(-1.0));

  // ties get averaged ranks; the coefficient stays within [-1, 1]
  std::vector<double> tied = {1.0, 1.0, 2.0, 3.0};
  double r = spearman_rank_correlation(tied, up);
  CHECK(r > 0.9);
  CHECK(r <= 1.0);

  std::vector<double> flat(4, 2.0);
  CHECK_THROWS_AS(spearman_rank_correlation(flat, up), NumericError);
  std::vector<double> single = {1.0};
  CHECK_THROWS_AS(spearman_rank_correlation(single, single), NumericError);
  std::vector<double> three = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(spearman_rank_correlation(three, up), NumericError);
}

TEST_CASE("balanced computation and communication want exactly one worker") {
  CostParams p;
  p.comp_cost = 4.0;
  p.comm_cost = 4.0;
  CostReport r = cost_model(p);
  CHECK(r.optimal_workers == doctest::Approx(1.0));
  CHECK(r.min_overall_cost == doctest::Approx(8.0));
}

TEST_CASE("selection ratios scale traffic projections linearly") {
  CostParams p;
  p.topics = 2000;
  p.vocab = 141043;
  p.docs = 300000;
  p.minibatches = 500;
  p.iters = 100;
  p.batch_iters = 500;
  p.workers = 1000;
  p.lambda_w = 0.1;
  p.lambda_k = 50.0 / 2000.0;
  p.doc_density = 0.009;
  p.bytes_per_entry = 8.0;
  CostReport r = cost_model(p);
  CHECK(r.full_exchange_bytes == doctest::Approx(1.128344e17).epsilon(1e-6));
  CHECK(r.power_exchange_bytes ==
        doctest::Approx(0.1 * 0.025 * 1.128344e17).epsilon(1e-6));
  CHECK(r.batch_sampler_bytes == doctest::Approx(1.128344e15).epsilon(1e-6));
  CHECK(r.optimal_workers == doctest::Approx(std::sqrt(r.comp_cost / r.comm_cost)));
  // communication row grows with N, computation row shrinks
  CHECK(r.distributed.communication ==
        doctest::Approx(r.comm_cost * p.workers));
  CHECK(r.distributed.computation == doctest::Approx(r.comp_cost / p.workers));
  CHECK(r.single_node.communication == 0.0);
}

TEST_CASE("cost inputs must be complete and positive") {
  CostParams half;
  half.comp_cost = 1.0;  // missing comm_cost
  CHECK_THROWS_AS(cost_model(half), ConfigError);
  CostParams raw;  // all quantities at their zero defaults
  CHECK_THROWS_AS(cost_model(raw), ConfigError);
  CostParams bad;
  bad.topics = 10;
  bad.vocab = 10;
  bad.docs = 10;
  bad.minibatches = 2;
  bad.iters = 5;
  bad.lambda_w = 1.5;  // out of range
  CHECK_THROWS_AS(cost_model(bad), ConfigError);
}

TEST_CASE("cost parameters parse from kebab-case JSON") {
  CostParams p = cost_params_from_json(
      R"({"topics": 10, "vocab": 100, "docs": 50, "minibatches": 2,
          "iters": 4, "lambda-w": 0.5, "lambda-k": 0.5, "doc-density": 0.2,
          "workers": 3, "batch-iters": 8, "bytes-per-entry": 4})");
  CHECK(p.topics == 10.0);
  CHECK(p.lambda_w == 0.5);
  CHECK(p.bytes_per_entry == 4.0);
  CHECK_THROWS_AS(cost_params_from_json(R"({"wat": 1})"), ConfigError);
  CHECK_THROWS_AS(cost_params_from_json("nope"), ConfigError);

  std::string report = cost_model_report_json(p);
  json j = json::parse(report);
  CHECK(j["optimal-workers"].is_number());
  CHECK(j["algorithms"]["distributed"]["communication"].is_number());
  CHECK(j["projection-bytes"]["full-exchange"].is_number());
}

}  // TEST_SUITE
