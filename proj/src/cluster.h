#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "corpus.h"
#include "inference.h"
#include "scheduler.h"
#include "sync.h"

namespace pobp {

// Engine-side settings for one training run. alpha must already be resolved
// (the conventional default is 2/K, see resolve_alpha).
struct TrainConfig {
  uint32_t topics = 0;
  double alpha = 0.0;
  double beta = 0.01;
  double lambda_w = 0.1;          // fraction of the vocabulary refreshed
  uint32_t lambda_k_topics = 50;  // topics refreshed per selected word
  uint64_t minibatch_target_nnz = 45000;
  uint32_t num_workers = 1;
  uint64_t seed = 42;
  double epsilon = 1e-3;  // mean residual per token that counts as converged
  uint32_t max_iters = 200;
  bool serial_workers = false;  // run workers on the calling thread

  void validate() const;
  Hyperparams hyper() const { return {topics, alpha, beta}; }
  SelectionRatios ratios() const;
  bool selection_covers_everything(uint32_t vocab) const;
};

double resolve_alpha(double configured, uint32_t topics);

struct IterationMetrics {
  uint32_t minibatch = 0;
  uint32_t iteration = 0;
  double mean_residual = 0.0;
  uint64_t swept_entries = 0;     // message updates across workers
  uint64_t synced_cells = 0;      // scope cells (per worker, per direction)
  uint64_t up_wire_entries = 0;   // wire entries summed over workers
  uint64_t up_bytes = 0;
  uint64_t down_bytes = 0;
  uint64_t fallback_updates = 0;
  double sweep_seconds = 0.0;
  double sync_seconds = 0.0;
};

struct BatchSummary {
  uint32_t minibatch = 0;
  uint32_t iterations = 0;
  double final_mean_residual = 0.0;
  uint32_t num_docs = 0;
  uint64_t nnz = 0;
  uint64_t num_tokens = 0;
};

// Observation and instrumentation points. on_barrier fires after every
// merge with the freshly merged stats; on_batch_end after a mini-batch's
// last barrier; corrupt_before_sync lets tests damage replicas to exercise
// the protocol checks.
struct BarrierView {
  uint32_t minibatch;
  uint32_t iteration;
  const GlobalStats& merged;
  const IterationMetrics& metrics;
};

struct RunHooks {
  std::function<void(const BarrierView&)> on_barrier;
  std::function<void(uint32_t minibatch, const GlobalStats&)> on_batch_end;
  std::function<void(uint32_t minibatch, uint32_t iteration,
                     std::vector<GlobalStats>& replicas)>
      corrupt_before_sync;
};

// Runs one mini-batch to convergence (mean residual below epsilon) or to
// max_iters. stats carries the accumulated word-topic mass in and out; its
// residual matrix is reset at batch start. Iteration 1 sweeps every entry
// and synchronizes the full matrices; later iterations sweep and
// synchronize only the power set selected from the previous barrier's
// residuals. Appends one up and one down ledger record per worker per
// barrier.
std::vector<IterationMetrics> run_minibatch(const MiniBatch& batch,
                                            GlobalStats& stats,
                                            const TrainConfig& cfg,
                                            CommLedger& ledger,
                                            const RunHooks* hooks = nullptr);

struct TrainResult {
  GlobalStats stats;
  std::vector<BatchSummary> batches;
  std::vector<IterationMetrics> iterations;
  CommLedger ledger;
  double sweep_seconds = 0.0;
  double sync_seconds = 0.0;
  uint64_t fallback_updates = 0;
  uint64_t peak_tracked_bytes = 0;  // messages + doc-topic rows, see memtrack
};

// Streams the corpus through mini-batches: documents arrive once, per-batch
// messages and document stats are dropped when the batch completes, and only
// the two shared (word x topic) matrices persist across batches.
TrainResult run_pobp(const SparseCorpus& train, const TrainConfig& cfg,
                     const RunHooks* hooks = nullptr);

}  // namespace pobp
