// Command-line front end. Talks to the engine exclusively through the C API
// in pobp/pobp.h; CLI11 does the flag parsing and nlohmann/json formats the
// machine-readable pieces.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pobp/pobp.h"

using nlohmann::json;

namespace {

struct CStr {
  char* p = nullptr;
  ~CStr() { pobp_string_free(p); }
  CStr() = default;
  CStr(const CStr&) = delete;
  CStr& operator=(const CStr&) = delete;
};

int report_failure(int rc) {
  std::cerr << "pobp: " << pobp_last_error() << "\n";
  return rc;
}

// Config knobs shared by train and evaluate. Only flags the user actually
// set end up in the overlay, so precedence stays: flags > config file >
// built-in defaults.
struct ConfigFlags {
  uint32_t topics = 10;
  double alpha = 0.0;
  double beta = 0.01;
  double lambda_w = 0.1;
  uint32_t lambda_k_times_k = 50;
  uint64_t minibatch_target_nnz = 45000;
  uint32_t num_workers = 1;
  uint64_t seed = 42;
  double epsilon = 1e-3;
  uint32_t max_iters = 200;
  double test_fraction = 0.2;
  uint32_t fold_in_iters = 500;
  uint64_t eval_docs = 0;
  bool per_batch_eval = true;
  bool checkpoint_eval = false;
  bool serial_workers = false;
  uint32_t truncate_vocab = 0;

  std::map<std::string, CLI::Option*> set;

  void attach(CLI::App* cmd) {
    set["topics"] =
        cmd->add_option("--topics", topics, "number of topics K")
            ->capture_default_str();
    set["alpha"] = cmd->add_option(
        "--alpha", alpha, "document-topic prior; <= 0 picks 2/K");
    set["beta"] = cmd->add_option("--beta", beta, "topic-word prior")
                      ->capture_default_str();
    set["lambda-w"] =
        cmd->add_option("--lambda-w", lambda_w,
                        "fraction of the vocabulary refreshed after sweep 1")
            ->capture_default_str();
    set["lambda-k-times-k"] =
        cmd->add_option("--lambda-k-times-k", lambda_k_times_k,
                        "topics refreshed per selected word")
            ->capture_default_str();
    set["minibatch-target-nnz"] =
        cmd->add_option("--minibatch-target-nnz", minibatch_target_nnz,
                        "entries per mini-batch")
            ->capture_default_str();
    set["num-workers"] =
        cmd->add_option("--num-workers", num_workers, "parallel workers")
            ->capture_default_str();
    set["seed"] = cmd->add_option("--seed", seed, "run seed")
                      ->capture_default_str();
    set["epsilon"] = cmd->add_option(
        "--epsilon", epsilon,
        "mean residual per token that counts as converged (inf = one sweep)");
    set["max-iters"] =
        cmd->add_option("--max-iters", max_iters, "sweep cap per mini-batch")
            ->capture_default_str();
    set["test-fraction"] =
        cmd->add_option("--test-fraction", test_fraction,
                        "held-out token fraction per document")
            ->capture_default_str();
    set["fold-in-iters"] =
        cmd->add_option("--fold-in-iters", fold_in_iters,
                        "sweeps when folding held-out documents in")
            ->capture_default_str();
    set["eval-docs"] = cmd->add_option(
        "--eval-docs", eval_docs, "cap on scored documents (0 = all)");
    set["per-batch-eval"] = cmd->add_flag(
        "--per-batch-eval,!--no-per-batch-eval", per_batch_eval,
        "score the held-out part after every mini-batch");
    set["checkpoint-eval"] = cmd->add_flag(
        "--checkpoint-eval,!--no-checkpoint-eval", checkpoint_eval,
        "score the held-out part at every barrier (slow)");
    set["serial-workers"] = cmd->add_flag(
        "--serial-workers,!--no-serial-workers", serial_workers,
        "run workers sequentially on one thread");
    set["truncate-vocab"] = cmd->add_option(
        "--truncate-vocab", truncate_vocab,
        "keep only the most frequent words (0 = all)");
  }

  json overlay() const {
    json o = json::object();
    const auto given = [this](const char* k) { return set.at(k)->count() > 0; };
    if (given("topics")) o["topics"] = topics;
    if (given("alpha")) o["alpha"] = alpha;
    if (given("beta")) o["beta"] = beta;
    if (given("lambda-w")) o["lambda-w"] = lambda_w;
    if (given("lambda-k-times-k")) o["lambda-k-times-k"] = lambda_k_times_k;
    if (given("minibatch-target-nnz"))
      o["minibatch-target-nnz"] = minibatch_target_nnz;
    if (given("num-workers")) o["num-workers"] = num_workers;
    if (given("seed")) o["seed"] = seed;
    if (given("epsilon"))
      o["epsilon"] = std::isinf(epsilon) ? json("inf") : json(epsilon);
    if (given("max-iters")) o["max-iters"] = max_iters;
    if (given("test-fraction")) o["test-fraction"] = test_fraction;
    if (given("fold-in-iters")) o["fold-in-iters"] = fold_in_iters;
    if (given("eval-docs")) o["eval-docs"] = eval_docs;
    if (given("per-batch-eval")) o["per-batch-eval"] = per_batch_eval;
    if (given("checkpoint-eval")) o["checkpoint-eval"] = checkpoint_eval;
    if (given("serial-workers")) o["serial-workers"] = serial_workers;
    if (given("truncate-vocab")) o["truncate-vocab"] = truncate_vocab;
    return o;
  }
};

// defaults -> optional config file -> flags; returns the merged JSON text or
// an empty string after printing the failure.
int build_config(const std::string& config_path, const ConfigFlags& flags,
                 std::string* out) {
  std::string base_text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "pobp: cannot open config file " << config_path << "\n";
      return POBP_ERR_IO;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    base_text = ss.str();
    CStr merged;
    if (int rc = pobp_config_merge(nullptr, base_text.c_str(), &merged.p))
      return report_failure(rc);
    base_text = merged.p;
  }
  CStr final_cfg;
  const std::string overlay = flags.overlay().dump();
  if (int rc = pobp_config_merge(
          base_text.empty() ? nullptr : base_text.c_str(), overlay.c_str(),
          &final_cfg.p))
    return report_failure(rc);
  *out = final_cfg.p;
  return POBP_OK;
}

int run_train(const std::string& docword, const std::string& vocab,
              const std::string& out_dir, const std::string& config_path,
              const ConfigFlags& flags) {
  std::string cfg;
  if (int rc = build_config(config_path, flags, &cfg)) return rc;
  CStr report;
  if (int rc = pobp_train(docword.c_str(), vocab.c_str(), out_dir.c_str(),
                          cfg.c_str(), &report.p))
    return report_failure(rc);

  const json rep = json::parse(report.p);
  std::cout << "trained " << rep["batches"].size() << " mini-batch(es), "
            << rep["counters"]["iterations-total"].get<uint64_t>()
            << " sweep iterations\n";
  std::cout << "sync traffic: " << rep["ledger"]["total-bytes"].get<uint64_t>()
            << " bytes\n";
  for (const auto& b : rep["batches"])
    if (b.contains("perplexity"))
      std::cout << "mini-batch " << b["minibatch"].get<uint32_t>()
                << " held-out perplexity " << b["perplexity"].get<double>()
                << "\n";
  std::cout << "report: " << out_dir << "/report.json\n";
  return 0;
}

int run_evaluate(const std::string& model, const std::string& docword,
                 const std::string& vocab, const std::string& out_dir,
                 const std::string& config_path, const ConfigFlags& flags) {
  std::string cfg;
  if (int rc = build_config(config_path, flags, &cfg)) return rc;
  double perplexity = 0.0;
  CStr report;
  if (int rc = pobp_evaluate(model.c_str(), docword.c_str(), vocab.c_str(),
                             out_dir.c_str(), cfg.c_str(), &perplexity,
                             &report.p))
    return report_failure(rc);
  const json rep = json::parse(report.p);
  std::cout << "perplexity " << perplexity << " over "
            << rep["test-tokens"].get<uint64_t>() << " held-out tokens in "
            << rep["evaluated-documents"].get<uint64_t>() << " document(s)\n";
  std::cout << "report: " << out_dir << "/eval_report.json\n";
  return 0;
}

std::string human_bytes(double b) {
  static const char* units[] = {"B", "KB", "MB", "GB", "TB", "PB", "EB"};
  int u = 0;
  while (b >= 1000.0 && u < 6) {
    b /= 1000.0;
    ++u;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g %s", b, units[u]);
  return buf;
}

int run_cost_model(const json& params, bool raw_json,
                   const std::string& out_dir) {
  CStr report;
  if (int rc = pobp_cost_model(params.dump().c_str(), &report.p))
    return report_failure(rc);
  if (!out_dir.empty()) {
    std::ofstream f(out_dir + "/cost_report.json");
    if (!f) {
      std::cerr << "pobp: cannot write " << out_dir << "/cost_report.json\n";
      return POBP_ERR_IO;
    }
    f << report.p;
  }
  if (raw_json) {
    std::cout << report.p;
    return 0;
  }
  const json r = json::parse(report.p);
  std::printf("computation cost A      %.6g\n", r["comp-cost"].get<double>());
  std::printf("communication cost B    %.6g\n", r["comm-cost"].get<double>());
  std::printf("optimal workers N*      %.6g\n",
              r["optimal-workers"].get<double>());
  std::printf("minimum overall cost    %.6g\n\n",
              r["min-overall-cost"].get<double>());

  std::printf("%-14s %14s %14s %16s\n", "algorithm", "computation", "memory",
              "communication");
  for (const char* name : {"distributed", "single-node", "batch-sampler"}) {
    const auto& a = r["algorithms"][name];
    std::printf("%-14s %14.6g %14.6g %16.6g\n", name,
                a["computation"].get<double>(), a["memory"].get<double>(),
                a["communication"].get<double>());
  }
  const auto& proj = r["projection-bytes"];
  std::printf("\nprojected sync volume\n");
  for (const char* name : {"full-exchange", "power-exchange", "batch-sampler"}) {
    const double v = proj[name].get<double>();
    if (v > 0.0)
      std::printf("%-14s %20.6g bytes  (%s)\n", name, v,
                  human_bytes(v).c_str());
  }
  return 0;
}

int run_diagnose(const std::string& residuals, const std::string& res_trace,
                 const std::string& ppx_trace, const std::string& out_dir,
                 const std::vector<double>& fractions, uint32_t minibatch) {
  json req{{"word-residuals", residuals}, {"out-dir", out_dir}};
  if (!res_trace.empty()) req["residual-trace"] = res_trace;
  if (!ppx_trace.empty()) req["perplexity-trace"] = ppx_trace;
  if (!fractions.empty()) req["fractions"] = fractions;
  if (minibatch != 0) req["minibatch"] = minibatch;

  CStr report;
  if (int rc = pobp_diagnose(req.dump().c_str(), &report.p))
    return report_failure(rc);
  const json r = json::parse(report.p);
  if (r.value("converged", false)) {
    std::cout << r["notice"].get<std::string>() << "\n";
    return 0;
  }
  for (const auto& s : r["top-shares"])
    std::printf("top %5.1f%% of words (%zu) hold %6.2f%% of residual mass\n",
                s["fraction"].get<double>() * 100.0,
                s["words"].get<size_t>(), s["share"].get<double>() * 100.0);
  if (r.contains("residual-perplexity-correlation"))
    std::printf("residual/perplexity rank correlation: %.4f over %zu points\n",
                r["residual-perplexity-correlation"].get<double>(),
                r["correlated-points"].get<size_t>());
  std::cout << "report: " << out_dir << "/diagnose_report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pobp: streaming topic-model trainer with residual-scheduled sweeps "
      "and byte-accounted worker synchronization"};
  app.set_version_flag("--version", pobp_version());
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "estimate a model from a corpus");
  std::string tr_docword, tr_vocab, tr_out, tr_config;
  train->add_option("--docword", tr_docword, "bag-of-words entry file")
      ->required();
  train->add_option("--vocab", tr_vocab, "vocabulary file, one word per line")
      ->required();
  train->add_option("--out-dir", tr_out, "artifact directory")->required();
  train->add_option("--config", tr_config, "JSON config file");
  ConfigFlags tr_flags;
  tr_flags.attach(train);

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "score a saved model on held-out tokens");
  std::string ev_model, ev_docword, ev_vocab, ev_out, ev_config;
  evaluate->add_option("--model", ev_model, "saved word-topic statistics")
      ->required();
  evaluate->add_option("--docword", ev_docword, "bag-of-words entry file")
      ->required();
  evaluate->add_option("--vocab", ev_vocab, "vocabulary file")->required();
  evaluate->add_option("--out-dir", ev_out, "artifact directory")->required();
  evaluate->add_option("--config", ev_config, "JSON config file");
  ConfigFlags ev_flags;
  ev_flags.attach(evaluate);

  // cost-model
  auto* cost = app.add_subcommand(
      "cost-model", "evaluate the analytic computation/communication model");
  struct {
    double comp_cost = 0, comm_cost = 0, topics = 0, vocab = 0, docs = 0,
           minibatches = 0, iters = 0, batch_iters = 0, workers = 0,
           lambda_w = 1, lambda_k = 1, doc_density = 1, batch_doc_density = 1,
           bytes_per_entry = 8;
  } cm;
  std::map<std::string, CLI::Option*> cm_set;
  const auto cm_opt = [&](const char* flag, const char* key, double& field,
                          const char* help) {
    cm_set[key] =
        cost->add_option(flag, field, help)->check(CLI::PositiveNumber);
  };
  cm_opt("--comp-cost", "comp-cost", cm.comp_cost,
         "total computation cost A (overrides derivation)");
  cm_opt("--comm-cost", "comm-cost", cm.comm_cost,
         "per-worker communication cost B (overrides derivation)");
  cm_opt("--topics", "topics", cm.topics, "K");
  cm_opt("--vocab", "vocab", cm.vocab, "W");
  cm_opt("--docs", "docs", cm.docs, "D");
  cm_opt("--minibatches", "minibatches", cm.minibatches, "M");
  cm_opt("--iters", "iters", cm.iters, "sweeps per mini-batch T");
  cm_opt("--batch-iters", "batch-iters", cm.batch_iters,
         "batch-sampler sweeps T'");
  cm_opt("--workers", "workers", cm.workers, "N");
  cm_opt("--lambda-w", "lambda-w", cm.lambda_w, "word selection fraction");
  cm_opt("--lambda-k", "lambda-k", cm.lambda_k, "topic selection fraction");
  cm_opt("--doc-density", "doc-density", cm.doc_density,
         "mean fraction of the vocabulary present per document");
  cm_opt("--batch-doc-density", "batch-doc-density", cm.batch_doc_density,
         "the same for the batch sampler");
  cm_opt("--bytes-per-entry", "bytes-per-entry", cm.bytes_per_entry,
         "wire bytes per synced matrix entry");
  bool cm_json = false;
  cost->add_flag("--json", cm_json, "print the raw JSON report");
  std::string cm_out;
  cost->add_option("--out-dir", cm_out,
                   "also write cost_report.json here (optional)");

  // diagnose
  auto* diagnose = app.add_subcommand(
      "diagnose", "rank residual mass by word and correlate traces");
  std::string dg_residuals, dg_res_trace, dg_ppx_trace, dg_out;
  std::vector<double> dg_fractions;
  uint32_t dg_minibatch = 0;
  diagnose
      ->add_option("--word-residuals", dg_residuals,
                   "per-word residual CSV from a training run")
      ->required();
  diagnose->add_option("--residual-trace", dg_res_trace,
                       "per-iteration mean residual CSV");
  diagnose->add_option("--perplexity-trace", dg_ppx_trace,
                       "per-iteration perplexity CSV");
  diagnose->add_option("--out-dir", dg_out, "artifact directory")->required();
  diagnose
      ->add_option("--fractions", dg_fractions,
                   "top fractions to report (default 0.05,0.1,0.2,0.5)")
      ->delimiter(',');
  diagnose->add_option("--minibatch", dg_minibatch,
                       "restrict trace correlation to one mini-batch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "pobp: " << e.what() << "\n";
    return POBP_ERR_CONFIG;
  }

  if (*train)
    return run_train(tr_docword, tr_vocab, tr_out, tr_config, tr_flags);
  if (*evaluate)
    return run_evaluate(ev_model, ev_docword, ev_vocab, ev_out, ev_config,
                        ev_flags);
  if (*cost) {
    json params = json::object();
    const auto put = [&](const char* key, double v) {
      if (cm_set.at(key)->count()) params[key] = v;
    };
    put("comp-cost", cm.comp_cost);
    put("comm-cost", cm.comm_cost);
    put("topics", cm.topics);
    put("vocab", cm.vocab);
    put("docs", cm.docs);
    put("minibatches", cm.minibatches);
    put("iters", cm.iters);
    put("batch-iters", cm.batch_iters);
    put("workers", cm.workers);
    put("lambda-w", cm.lambda_w);
    put("lambda-k", cm.lambda_k);
    put("doc-density", cm.doc_density);
    put("batch-doc-density", cm.batch_doc_density);
    put("bytes-per-entry", cm.bytes_per_entry);
    return run_cost_model(params, cm_json, cm_out);
  }
  if (*diagnose)
    return run_diagnose(dg_residuals, dg_res_trace, dg_ppx_trace, dg_out,
                        dg_fractions, dg_minibatch);
  return POBP_ERR_CONFIG;  // unreachable: a subcommand is required
}
