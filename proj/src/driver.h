#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cluster.h"
#include "costmodel.h"
#include "scheduler.h"

namespace pobp {

// The full user-facing knob set. Everything here round-trips through the
// JSON config format (kebab-case keys) and maps onto the engine's
// TrainConfig plus the evaluation settings.
struct RunSettings {
  uint32_t topics = 10;
  double alpha = 0.0;  // <= 0 means the conventional 2/K
  double beta = 0.01;
  double lambda_w = 0.1;
  uint32_t lambda_k_times_k = 50;  // power topics per selected word
  uint64_t minibatch_target_nnz = 45000;
  uint32_t num_workers = 1;
  uint64_t seed = 42;
  double epsilon = 1e-3;
  uint32_t max_iters = 200;
  double test_fraction = 0.2;
  uint32_t fold_in_iters = 500;
  uint64_t eval_docs = 0;  // 0 = score every document with test tokens
  bool per_batch_eval = true;
  bool checkpoint_eval = false;  // evaluate at every barrier (slow)
  bool serial_workers = false;
  uint32_t truncate_vocab = 0;  // 0 = keep the whole vocabulary

  TrainConfig train_config() const;

  bool operator==(const RunSettings&) const = default;
};

// JSON config surface. from-variants start from `base` (defaults unless
// given), overlay the keys present in `text`, and reject unknown keys.
std::string settings_to_json(const RunSettings& s);
RunSettings settings_from_json(const std::string& text,
                               const RunSettings& base = RunSettings{});

struct TrainOutcome {
  std::string report_path;
  std::string report_json;
  uint32_t batches = 0;
  uint32_t iterations = 0;
  uint64_t ledger_bytes = 0;
  std::optional<double> final_perplexity;  // last per-batch evaluation
};

TrainOutcome train_run(const std::string& docword_path,
                       const std::string& vocab_path,
                       const std::string& out_dir, const RunSettings& s);

struct EvalOutcome {
  std::string report_path;
  std::string report_json;
  double perplexity = 0.0;
  std::size_t eval_docs = 0;
  std::size_t test_tokens = 0;
};

EvalOutcome evaluate_run(const std::string& model_path,
                         const std::string& docword_path,
                         const std::string& vocab_path,
                         const std::string& out_dir, const RunSettings& s);

struct DiagnoseRequest {
  std::string word_residuals_path;
  std::string residual_trace_path;    // optional; pairs with the next one
  std::string perplexity_trace_path;  // optional
  std::string out_dir;
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.5};
  uint32_t minibatch = 0;  // restrict trace pairing to one batch; 0 = all
};

struct DiagnoseOutcome {
  std::string report_path;
  std::string report_json;
  bool converged = false;  // residual mass was zero; nothing to rank
  std::vector<TopShare> shares;
  std::optional<double> residual_perplexity_correlation;
};

DiagnoseOutcome diagnose_run(const DiagnoseRequest& req);
DiagnoseRequest diagnose_request_from_json(const std::string& text);

CostParams cost_params_from_json(const std::string& text);
std::string cost_model_report_json(const CostParams& p);

}  // namespace pobp
