#include "driver.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "diagnostics.h"
#include "errors.h"
#include "eval.h"
#include "log.h"
#include "modelio.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pobp {

namespace {

std::ofstream open_for_write(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("output directory is empty");
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw IoError("cannot create output directory " + dir + ": " +
                  ec.message());
  return p;
}

// Numbers in trace files carry full precision so downstream analysis sees
// exactly what the run saw.
struct full_prec {
  double v;
};
std::ostream& operator<<(std::ostream& os, full_prec f) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17) << f.v;
  os.precision(prec);
  os.flags(flags);
  return os;
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

uint64_t get_count(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<int64_t>() >= 0)
    return static_cast<uint64_t>(v.get<int64_t>());
  throw ConfigError("config key '" + key + "' must be a non-negative integer");
}

bool get_flag(const json& v, const std::string& key) {
  if (!v.is_boolean())
    throw ConfigError("config key '" + key + "' must be true or false");
  return v.get<bool>();
}

// epsilon may legitimately be infinite ("run exactly one sweep per batch");
// JSON has no literal for that, so the config format also accepts the
// string form.
double get_epsilon(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      size_t pos = 0;
      const std::string s = v.get<std::string>();
      const double parsed = std::stod(s, &pos);
      if (pos == s.size()) return parsed;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("config key 'epsilon' must be a number or a numeric "
                    "string such as \"inf\"");
}

json epsilon_to_json(double epsilon) {
  if (std::isinf(epsilon)) return json(epsilon > 0 ? "inf" : "-inf");
  return json(epsilon);
}

json settings_to_json_obj(const RunSettings& s) {
  return json{{"topics", s.topics},
              {"alpha", s.alpha},
              {"beta", s.beta},
              {"lambda-w", s.lambda_w},
              {"lambda-k-times-k", s.lambda_k_times_k},
              {"minibatch-target-nnz", s.minibatch_target_nnz},
              {"num-workers", s.num_workers},
              {"seed", s.seed},
              {"epsilon", epsilon_to_json(s.epsilon)},
              {"max-iters", s.max_iters},
              {"test-fraction", s.test_fraction},
              {"fold-in-iters", s.fold_in_iters},
              {"eval-docs", s.eval_docs},
              {"per-batch-eval", s.per_batch_eval},
              {"checkpoint-eval", s.checkpoint_eval},
              {"serial-workers", s.serial_workers},
              {"truncate-vocab", s.truncate_vocab}};
}

json parse_json_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

std::string write_report(const fs::path& path, const json& report) {
  auto out = open_for_write(path);
  std::string text = report.dump(2);
  text.push_back('\n');
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
  return text;
}

}  // namespace

TrainConfig RunSettings::train_config() const {
  TrainConfig c;
  c.topics = topics;
  c.alpha = resolve_alpha(alpha, topics);
  c.beta = beta;
  c.lambda_w = lambda_w;
  c.lambda_k_topics = lambda_k_times_k;
  c.minibatch_target_nnz = minibatch_target_nnz;
  c.num_workers = num_workers;
  c.seed = seed;
  c.epsilon = epsilon;
  c.max_iters = max_iters;
  c.serial_workers = serial_workers;
  return c;
}

std::string settings_to_json(const RunSettings& s) {
  return settings_to_json_obj(s).dump(2) + "\n";
}

RunSettings settings_from_json(const std::string& text,
                               const RunSettings& base) {
  const json j = parse_json_text(text, "config");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunSettings s = base;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "topics")
        s.topics = static_cast<uint32_t>(get_count(val, key));
      else if (key == "alpha")
        s.alpha = get_number(val, key);
      else if (key == "beta")
        s.beta = get_number(val, key);
      else if (key == "lambda-w")
        s.lambda_w = get_number(val, key);
      else if (key == "lambda-k-times-k")
        s.lambda_k_times_k = static_cast<uint32_t>(get_count(val, key));
      else if (key == "minibatch-target-nnz")
        s.minibatch_target_nnz = get_count(val, key);
      else if (key == "num-workers")
        s.num_workers = static_cast<uint32_t>(get_count(val, key));
      else if (key == "seed")
        s.seed = get_count(val, key);
      else if (key == "epsilon")
        s.epsilon = get_epsilon(val);
      else if (key == "max-iters")
        s.max_iters = static_cast<uint32_t>(get_count(val, key));
      else if (key == "test-fraction")
        s.test_fraction = get_number(val, key);
      else if (key == "fold-in-iters")
        s.fold_in_iters = static_cast<uint32_t>(get_count(val, key));
      else if (key == "eval-docs")
        s.eval_docs = get_count(val, key);
      else if (key == "per-batch-eval")
        s.per_batch_eval = get_flag(val, key);
      else if (key == "checkpoint-eval")
        s.checkpoint_eval = get_flag(val, key);
      else if (key == "serial-workers")
        s.serial_workers = get_flag(val, key);
      else if (key == "truncate-vocab")
        s.truncate_vocab = static_cast<uint32_t>(get_count(val, key));
      else
        throw ConfigError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return s;
}

TrainOutcome train_run(const std::string& docword_path,
                       const std::string& vocab_path,
                       const std::string& out_dir, const RunSettings& s) {
  const auto t_start = std::chrono::steady_clock::now();
  const fs::path out = prepare_out_dir(out_dir);

  SparseCorpus corpus = load_uci_bow(docword_path, vocab_path);
  const uint32_t original_vocab = corpus.vocab_size;
  if (s.truncate_vocab > 0) corpus = truncate_vocab(corpus, s.truncate_vocab);

  if (s.test_fraction < 0.0 || s.test_fraction >= 1.0)
    throw ConfigError("test-fraction must lie in [0, 1)");
  const TrainTestSplit split =
      split_train_test(corpus, s.test_fraction, s.seed);

  TrainConfig cfg = s.train_config();
  cfg.validate();
  const Hyperparams hp = cfg.hyper();
  const bool eval_possible = split.test.num_tokens > 0;
  if ((s.per_batch_eval || s.checkpoint_eval) && !eval_possible)
    log::info("held-out part is empty; skipping perplexity evaluation");

  // Per-iteration residual mass by word for mini-batch 1; the midpoint
  // snapshot feeds the power-law diagnosis.
  std::vector<std::vector<double>> batch1_residual_totals;
  struct CheckpointPpx {
    uint32_t minibatch, iteration;
    double perplexity;
  };
  std::vector<CheckpointPpx> checkpoint_ppx;
  struct BatchPpx {
    uint32_t minibatch;
    double perplexity;
  };
  std::vector<BatchPpx> batch_ppx;

  RunHooks hooks;
  hooks.on_barrier = [&](const BarrierView& v) {
    if (v.minibatch == 1)
      batch1_residual_totals.push_back(
          word_residual_totals(v.merged.residual));
    if (s.checkpoint_eval && eval_possible) {
      const auto r =
          evaluate_split(split.train, split.test, v.merged.word_topic, hp,
                         s.fold_in_iters, s.seed, s.eval_docs);
      checkpoint_ppx.push_back({v.minibatch, v.iteration, r.perplexity});
    }
  };
  hooks.on_batch_end = [&](uint32_t minibatch, const GlobalStats& stats) {
    if (s.per_batch_eval && eval_possible) {
      const auto r = evaluate_split(split.train, split.test, stats.word_topic,
                                    hp, s.fold_in_iters, s.seed, s.eval_docs);
      batch_ppx.push_back({minibatch, r.perplexity});
      log::info("mini-batch %u held-out perplexity %.4f", minibatch,
                r.perplexity);
    }
  };

  TrainResult result = run_pobp(split.train, cfg, &hooks);

  json artifacts = json::object();

  save_model((out / "phi_hat.bin").string(), result.stats.word_topic);
  artifacts["model"] = "phi_hat.bin";
  save_model((out / "phi.bin").string(),
             normalize_topics(result.stats.word_topic, cfg.beta));
  artifacts["topics"] = "phi.bin";

  {
    auto f = open_for_write(out / "ledger.csv");
    result.ledger.write_csv(f);
    artifacts["ledger"] = "ledger.csv";
  }
  {
    auto f = open_for_write(out / "residual_trace.csv");
    f << "minibatch,iteration,mean_residual,swept_entries,synced_cells,"
         "up_bytes,down_bytes\n";
    for (const auto& it : result.iterations)
      f << it.minibatch << ',' << it.iteration << ','
        << full_prec{it.mean_residual} << ',' << it.swept_entries << ','
        << it.synced_cells << ',' << it.up_bytes << ',' << it.down_bytes
        << '\n';
    artifacts["residual-trace"] = "residual_trace.csv";
  }
  if (!batch1_residual_totals.empty()) {
    // Midpoint sweep of the first mini-batch, the spot where the residual
    // ranking is most informative: earlier it is still near-uniform, later
    // it has mostly converged away.
    const size_t mid = (batch1_residual_totals.size() + 1) / 2;
    const auto& totals = batch1_residual_totals[mid - 1];
    auto f = open_for_write(out / "word_residuals.csv");
    f << "word,residual\n";
    for (size_t w = 0; w < totals.size(); ++w)
      f << (w + 1) << ',' << full_prec{totals[w]} << '\n';
    artifacts["word-residuals"] = "word_residuals.csv";
  }
  if (s.checkpoint_eval && !checkpoint_ppx.empty()) {
    auto f = open_for_write(out / "perplexity_trace.csv");
    f << "minibatch,iteration,perplexity\n";
    for (const auto& row : checkpoint_ppx)
      f << row.minibatch << ',' << row.iteration << ','
        << full_prec{row.perplexity} << '\n';
    artifacts["perplexity-trace"] = "perplexity_trace.csv";
  }
  if (s.per_batch_eval && !batch_ppx.empty()) {
    auto f = open_for_write(out / "perplexity_batches.csv");
    f << "minibatch,perplexity\n";
    for (const auto& row : batch_ppx)
      f << row.minibatch << ',' << full_prec{row.perplexity} << '\n';
    artifacts["perplexity-batches"] = "perplexity_batches.csv";
  }

  const LedgerSummary ls = ledger_summary(result.ledger, cfg.topics,
                                          corpus.vocab_size, cfg.num_workers);

  json batches = json::array();
  for (const auto& b : result.batches) {
    json row{{"minibatch", b.minibatch},
             {"iterations", b.iterations},
             {"final-mean-residual", b.final_mean_residual},
             {"documents", b.num_docs},
             {"nnz", b.nnz},
             {"tokens", b.num_tokens}};
    for (const auto& p : batch_ppx)
      if (p.minibatch == b.minibatch) row["perplexity"] = p.perplexity;
    batches.push_back(std::move(row));
  }

  json config_echo = settings_to_json_obj(s);
  config_echo["alpha"] = cfg.alpha;  // the value the run actually used

  const double total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  json report{
      {"config", config_echo},
      {"derived",
       {{"lambda-k", cfg.ratios().lambda_k},
        {"full-selection", cfg.selection_covers_everything(corpus.vocab_size)}}},
      {"corpus",
       {{"documents", corpus.num_docs},
        {"vocabulary", corpus.vocab_size},
        {"original-vocabulary", original_vocab},
        {"nnz", corpus.entries.size()},
        {"tokens", corpus.num_tokens},
        {"train-tokens", split.train.num_tokens},
        {"test-tokens", split.test.num_tokens}}},
      {"batches", batches},
      {"ledger",
       {{"total-bytes", ls.total_bytes},
        {"up-bytes", ls.up_bytes},
        {"down-bytes", ls.down_bytes},
        {"full-sweep-bytes", ls.full_sweep_bytes},
        {"partial-sweep-bytes", ls.partial_sweep_bytes},
        {"partial-entry-ratio", ls.partial_entry_ratio},
        {"partial-barriers", ls.partial_barriers}}},
      {"timings",
       {{"sweep-seconds", result.sweep_seconds},
        {"sync-seconds", result.sync_seconds},
        {"total-seconds", total_seconds}}},
      {"counters",
       {{"iterations-total", result.iterations.size()},
        {"fallback-updates", result.fallback_updates},
        {"peak-tracked-bytes", result.peak_tracked_bytes}}},
      {"artifacts", artifacts}};

  TrainOutcome outcome;
  outcome.report_path = (out / "report.json").string();
  outcome.report_json = write_report(out / "report.json", report);
  outcome.batches = static_cast<uint32_t>(result.batches.size());
  outcome.iterations = static_cast<uint32_t>(result.iterations.size());
  outcome.ledger_bytes = ls.total_bytes;
  if (!batch_ppx.empty())
    outcome.final_perplexity = batch_ppx.back().perplexity;
  return outcome;
}

EvalOutcome evaluate_run(const std::string& model_path,
                         const std::string& docword_path,
                         const std::string& vocab_path,
                         const std::string& out_dir, const RunSettings& s) {
  const fs::path out = prepare_out_dir(out_dir);

  const Matrix word_topic = load_model(model_path);
  SparseCorpus corpus = load_uci_bow(docword_path, vocab_path);
  if (s.truncate_vocab > 0) corpus = truncate_vocab(corpus, s.truncate_vocab);
  if (word_topic.rows() != corpus.vocab_size)
    throw ConfigError(
        "model/corpus vocabulary mismatch: expected " +
        std::to_string(word_topic.rows()) + " words, found " +
        std::to_string(corpus.vocab_size));

  const auto topics = static_cast<uint32_t>(word_topic.cols());
  Hyperparams hp{topics, resolve_alpha(s.alpha, topics), s.beta};
  hp.validate();

  if (s.test_fraction <= 0.0 || s.test_fraction >= 1.0)
    throw ConfigError("test-fraction must lie in (0, 1) for evaluation");
  const TrainTestSplit split =
      split_train_test(corpus, s.test_fraction, s.seed);
  const EvalResult r =
      evaluate_split(split.train, split.test, word_topic, hp, s.fold_in_iters,
                     s.seed, s.eval_docs);

  json config_echo = settings_to_json_obj(s);
  config_echo["alpha"] = hp.alpha;
  config_echo["topics"] = topics;  // the model defines K here

  json report{{"config", config_echo},
              {"model",
               {{"path", model_path},
                {"topics", topics},
                {"vocabulary", word_topic.rows()}}},
              {"corpus",
               {{"documents", corpus.num_docs},
                {"vocabulary", corpus.vocab_size},
                {"tokens", corpus.num_tokens}}},
              {"perplexity", r.perplexity},
              {"evaluated-documents", r.eval_docs},
              {"test-tokens", r.test_tokens}};

  EvalOutcome outcome;
  outcome.report_path = (out / "eval_report.json").string();
  outcome.report_json = write_report(out / "eval_report.json", report);
  outcome.perplexity = r.perplexity;
  outcome.eval_docs = r.eval_docs;
  outcome.test_tokens = r.test_tokens;
  return outcome;
}

DiagnoseOutcome diagnose_run(const DiagnoseRequest& req) {
  const fs::path out = prepare_out_dir(req.out_dir);
  for (double f : req.fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("fractions must lie in (0, 1]");

  const std::vector<double> totals =
      read_word_residuals_csv(req.word_residuals_path);
  const double total_mass =
      std::accumulate(totals.begin(), totals.end(), 0.0);

  DiagnoseOutcome outcome;
  json report{{"source", req.word_residuals_path},
              {"total-residual", total_mass}};

  if (totals.empty() || total_mass <= 0.0) {
    outcome.converged = true;
    report["converged"] = true;
    report["notice"] =
        "residual mass is zero: the run converged; nothing to rank";
    outcome.report_path = (out / "diagnose_report.json").string();
    outcome.report_json =
        write_report(out / "diagnose_report.json", report);
    return outcome;
  }
  report["converged"] = false;

  json artifacts = json::object();
  {
    const auto curve = residual_rank_curve(totals);
    auto f = open_for_write(out / "rank_curve.csv");
    f << "rank,word_id,residual\n";
    for (const auto& p : curve)
      f << p.rank << ',' << (p.word + 1) << ',' << full_prec{p.residual}
        << '\n';
    artifacts["rank-curve"] = "rank_curve.csv";
  }

  outcome.shares = powerlaw_topshare(totals, req.fractions);
  {
    auto f = open_for_write(out / "topshare.csv");
    f << "fraction,words,share\n";
    json shares = json::array();
    for (const auto& ts : outcome.shares) {
      f << full_prec{ts.fraction} << ',' << ts.words << ','
        << full_prec{ts.share} << '\n';
      shares.push_back({{"fraction", ts.fraction},
                        {"words", ts.words},
                        {"share", ts.share}});
    }
    report["top-shares"] = std::move(shares);
    artifacts["top-shares"] = "topshare.csv";
  }

  if (!req.residual_trace_path.empty() &&
      !req.perplexity_trace_path.empty()) {
    const auto res_rows =
        read_trace_csv(req.residual_trace_path, "mean_residual");
    const auto ppx_rows =
        read_trace_csv(req.perplexity_trace_path, "perplexity");
    std::vector<double> res, ppx;
    for (const auto& a : res_rows) {
      if (req.minibatch != 0 && a.minibatch != req.minibatch) continue;
      for (const auto& b : ppx_rows)
        if (a.minibatch == b.minibatch && a.iteration == b.iteration) {
          res.push_back(a.value);
          ppx.push_back(b.value);
          break;
        }
    }
    if (res.size() < 2)
      throw NumericError(
          "traces share fewer than two (minibatch, iteration) rows; cannot "
          "correlate");
    const double rho = spearman_rank_correlation(res, ppx);
    outcome.residual_perplexity_correlation = rho;
    report["residual-perplexity-correlation"] = rho;
    report["correlated-points"] = res.size();
  }

  report["artifacts"] = std::move(artifacts);
  outcome.report_path = (out / "diagnose_report.json").string();
  outcome.report_json = write_report(out / "diagnose_report.json", report);
  return outcome;
}

DiagnoseRequest diagnose_request_from_json(const std::string& text) {
  const json j = parse_json_text(text, "diagnose request");
  if (!j.is_object())
    throw ConfigError("diagnose request must be a JSON object");
  DiagnoseRequest req;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "word-residuals")
        req.word_residuals_path = val.get<std::string>();
      else if (key == "residual-trace")
        req.residual_trace_path = val.get<std::string>();
      else if (key == "perplexity-trace")
        req.perplexity_trace_path = val.get<std::string>();
      else if (key == "out-dir")
        req.out_dir = val.get<std::string>();
      else if (key == "fractions")
        req.fractions = val.get<std::vector<double>>();
      else if (key == "minibatch")
        req.minibatch = static_cast<uint32_t>(get_count(val, key));
      else
        throw ConfigError("unknown diagnose key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("diagnose key '" + key + "': " + e.what());
    }
  }
  if (req.word_residuals_path.empty())
    throw ConfigError("diagnose request needs 'word-residuals'");
  if (req.out_dir.empty())
    throw ConfigError("diagnose request needs 'out-dir'");
  return req;
}

CostParams cost_params_from_json(const std::string& text) {
  const json j = parse_json_text(text, "cost-model parameters");
  if (!j.is_object())
    throw ConfigError("cost-model parameters must be a JSON object");
  CostParams p;
  for (const auto& [key, val] : j.items()) {
    double* field = nullptr;
    if (key == "comp-cost")
      field = &p.comp_cost;
    else if (key == "comm-cost")
      field = &p.comm_cost;
    else if (key == "topics")
      field = &p.topics;
    else if (key == "vocab")
      field = &p.vocab;
    else if (key == "docs")
      field = &p.docs;
    else if (key == "minibatches")
      field = &p.minibatches;
    else if (key == "iters")
      field = &p.iters;
    else if (key == "batch-iters")
      field = &p.batch_iters;
    else if (key == "workers")
      field = &p.workers;
    else if (key == "lambda-w")
      field = &p.lambda_w;
    else if (key == "lambda-k")
      field = &p.lambda_k;
    else if (key == "doc-density")
      field = &p.doc_density;
    else if (key == "batch-doc-density")
      field = &p.batch_doc_density;
    else if (key == "bytes-per-entry")
      field = &p.bytes_per_entry;
    else
      throw ConfigError("unknown cost-model key '" + key + "'");
    *field = get_number(val, key);
  }
  return p;
}

std::string cost_model_report_json(const CostParams& p) {
  const CostReport r = cost_model(p);
  const auto algo = [](const AlgorithmCost& a) {
    return json{{"computation", a.computation},
                {"memory", a.memory},
                {"communication", a.communication}};
  };
  json report{
      {"inputs",
       {{"comp-cost", p.comp_cost},
        {"comm-cost", p.comm_cost},
        {"topics", p.topics},
        {"vocab", p.vocab},
        {"docs", p.docs},
        {"minibatches", p.minibatches},
        {"iters", p.iters},
        {"batch-iters", p.batch_iters},
        {"workers", p.workers},
        {"lambda-w", p.lambda_w},
        {"lambda-k", p.lambda_k},
        {"doc-density", p.doc_density},
        {"batch-doc-density", p.batch_doc_density},
        {"bytes-per-entry", p.bytes_per_entry}}},
      {"comp-cost", r.comp_cost},
      {"comm-cost", r.comm_cost},
      {"optimal-workers", r.optimal_workers},
      {"min-overall-cost", r.min_overall_cost},
      {"algorithms",
       {{"distributed", algo(r.distributed)},
        {"single-node", algo(r.single_node)},
        {"batch-sampler", algo(r.batch_sampler)}}},
      {"projection-bytes",
       {{"full-exchange", r.full_exchange_bytes},
        {"power-exchange", r.power_exchange_bytes},
        {"batch-sampler", r.batch_sampler_bytes}}}};
  return report.dump(2) + "\n";
}

}  // namespace pobp
