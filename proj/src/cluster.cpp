#include "cluster.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "errors.h"
#include "log.h"
#include "memtrack.h"
#include "rng.h"

namespace pobp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct WorkerState {
  Shard shard;
  MessageBlock messages;
  DocTopicStats doc_stats;
  uint64_t swept = 0;
  uint64_t fallbacks = 0;
  bool failed = false;
  ErrorClass fail_class = ErrorClass::numeric;
  std::string fail_message;
};

// One worker's sweep over its shard for one iteration. Reads the shared
// barrier base, writes only its own replica, doc rows and messages.
void sweep_shard(WorkerState& w, GlobalStats& replica, const GlobalStats& base,
                 const SyncScope& scope, const std::vector<int32_t>& word_slot,
                 std::span<const uint32_t> all_topics, const Hyperparams& hp) {
  const uint32_t K = hp.topics;
  std::vector<double> scratch(K);

  // Fresh residual accumulation starts from zero on every scope cell.
  scope.for_each_cell([&replica](uint32_t word, uint32_t k) {
    replica.residual(word, k) = 0.0;
  });

  size_t local_doc = 0;
  const auto& doc_ids = w.doc_stats.doc_ids();
  for (size_t i = 0; i < w.shard.entries.size(); ++i) {
    const CorpusEntry& e = w.shard.entries[i];
    while (local_doc < doc_ids.size() && doc_ids[local_doc] != e.doc)
      ++local_doc;

    std::span<const uint32_t> selected;
    if (scope.is_full()) {
      selected = all_topics;
    } else {
      const int32_t slot = word_slot[e.word];
      if (slot < 0) continue;
      selected = scope.topics_of_slot(static_cast<size_t>(slot));
    }

    auto doc_row = w.doc_stats.row(local_doc);
    auto msg = w.messages.at(i);
    const auto x = static_cast<double>(e.count);

    if (update_message(e.word, x, doc_row, base, msg, selected, hp, scratch))
      ++w.fallbacks;
    replica.apply_message_delta(e.word, x, msg, scratch, selected);
    auto res_row = replica.residual.row(e.word);
    for (uint32_t k : selected) {
      const double diff = scratch[k] - msg[k];
      doc_row[k] += x * diff;
      res_row[k] += x * std::abs(diff);
      msg[k] = scratch[k];
    }
    ++w.swept;
  }
}

}  // namespace

double resolve_alpha(double configured, uint32_t topics) {
  if (configured > 0.0) return configured;
  if (topics == 0) throw ConfigError("topics must be >= 1");
  return 2.0 / static_cast<double>(topics);
}

void TrainConfig::validate() const {
  hyper().validate();
  ratios().validate();
  if (minibatch_target_nnz == 0)
    throw ConfigError("minibatch target nnz must be >= 1");
  if (num_workers == 0) throw ConfigError("num_workers must be >= 1");
  if (max_iters == 0) throw ConfigError("max_iters must be >= 1");
  if (std::isnan(epsilon) || epsilon < 0.0)
    throw ConfigError("epsilon must be >= 0");
  if (lambda_k_topics == 0) throw ConfigError("lambda_k_topics must be >= 1");
}

SelectionRatios TrainConfig::ratios() const {
  SelectionRatios r;
  r.lambda_w = lambda_w;
  const uint32_t c = std::min(lambda_k_topics, topics);
  r.lambda_k = static_cast<double>(c) / static_cast<double>(topics);
  return r;
}

bool TrainConfig::selection_covers_everything(uint32_t vocab) const {
  return selection_count(lambda_w, vocab) == vocab &&
         std::min(lambda_k_topics, topics) == topics;
}

std::vector<IterationMetrics> run_minibatch(const MiniBatch& batch,
                                            GlobalStats& stats,
                                            const TrainConfig& cfg,
                                            CommLedger& ledger,
                                            const RunHooks* hooks) {
  cfg.validate();
  const uint32_t K = cfg.topics;
  const uint32_t W = stats.vocab_size();
  const uint32_t N = cfg.num_workers;
  const Hyperparams hp = cfg.hyper();
  if (batch.num_tokens == 0)
    throw ConfigError("mini-batch " + std::to_string(batch.index) +
                      " holds no tokens");

  // Residuals describe the current batch only.
  stats.residual.fill(0.0);

  auto shards = shard_documents(batch, N);
  std::vector<WorkerState> workers(N);
  std::vector<GlobalStats> replicas(N);
  for (uint32_t n = 0; n < N; ++n) {
    workers[n].shard = std::move(shards[n]);
    workers[n].messages = init_messages(workers[n].shard, K, cfg.seed);
    workers[n].doc_stats =
        rebuild_doc_topic(workers[n].shard, workers[n].messages, K);
  }

  // The first barrier's base: accumulated mass plus every entry's init
  // message contribution. Init draws are keyed by (seed, doc, word), so the
  // same base arises under any worker count.
  GlobalStats base = stats;
  for (uint32_t n = 0; n < N; ++n) {
    const WorkerState& w = workers[n];
    for (size_t i = 0; i < w.shard.entries.size(); ++i) {
      const CorpusEntry& e = w.shard.entries[i];
      const auto x = static_cast<double>(e.count);
      auto msg = w.messages.at(i);
      auto row = base.word_topic.row(e.word);
      for (uint32_t k = 0; k < K; ++k) {
        row[k] += x * msg[k];
        base.topic_totals[k] += x * msg[k];
      }
    }
  }
  for (uint32_t n = 0; n < N; ++n) replicas[n] = base;

  std::vector<uint32_t> all_topics(K);
  for (uint32_t k = 0; k < K; ++k) all_topics[k] = k;

  const bool always_full = cfg.selection_covers_everything(W);
  std::vector<IterationMetrics> metrics;
  PowerSet power;

  for (uint32_t t = 1; t <= cfg.max_iters; ++t) {
    const SyncScope scope = (t == 1 || always_full)
                                ? SyncScope::full(W, K)
                                : SyncScope::subset(power);
    const auto& word_slot = scope.word_slot(W);

    const auto sweep_t0 = std::chrono::steady_clock::now();
    auto run_worker = [&](uint32_t n) {
      try {
        sweep_shard(workers[n], replicas[n], base, scope, word_slot,
                    all_topics, hp);
      } catch (const Error& e) {
        workers[n].failed = true;
        workers[n].fail_class = e.error_class();
        workers[n].fail_message = e.what();
      } catch (const std::exception& e) {
        workers[n].failed = true;
        workers[n].fail_message = e.what();
      }
    };
    if (cfg.serial_workers || N == 1) {
      for (uint32_t n = 0; n < N; ++n) run_worker(n);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(N);
      for (uint32_t n = 0; n < N; ++n) threads.emplace_back(run_worker, n);
      for (auto& th : threads) th.join();
    }
    const double sweep_s = seconds_since(sweep_t0);
    for (uint32_t n = 0; n < N; ++n) {
      if (workers[n].failed)
        throw Error(workers[n].fail_class,
                    "worker " + std::to_string(n + 1) + " failed at mini-batch " +
                        std::to_string(batch.index) + " iteration " +
                        std::to_string(t) + ": " + workers[n].fail_message);
    }

    if (hooks && hooks->corrupt_before_sync)
      hooks->corrupt_before_sync(batch.index, t, replicas);

    const auto sync_t0 = std::chrono::steady_clock::now();
    MergeResult mr = sync_matrices(base, replicas, scope, t);

    IterationMetrics im;
    im.minibatch = batch.index;
    im.iteration = t;
    im.synced_cells = scope.cell_count();
    for (uint32_t n = 0; n < N; ++n) {
      const auto up = mr.up_payloads[n].serialize();
      ledger.append({batch.index, t, n + 1, LedgerRecord::Direction::up,
                     mr.up_payloads[n].wire_entry_count(), up.size()});
      im.up_wire_entries += mr.up_payloads[n].wire_entry_count();
      im.up_bytes += up.size();

      SyncPayload down = mr.down_payload;
      down.worker_id = n + 1;
      const auto down_bytes = down.serialize();
      ledger.append({batch.index, t, n + 1, LedgerRecord::Direction::down,
                     down.wire_entry_count(), down_bytes.size()});
      im.down_bytes += down_bytes.size();
    }

    base = std::move(mr.merged);
    for (uint32_t n = 0; n < N; ++n) replicas[n] = base;
    im.sync_seconds = seconds_since(sync_t0);
    im.sweep_seconds = sweep_s;

    for (uint32_t n = 0; n < N; ++n) {
      im.swept_entries += workers[n].swept;
      im.fallback_updates += workers[n].fallbacks;
      workers[n].swept = 0;
      workers[n].fallbacks = 0;
    }
    im.mean_residual = mean_residual(base, batch.num_tokens);
    metrics.push_back(im);

    if (hooks && hooks->on_barrier)
      hooks->on_barrier({batch.index, t, base, metrics.back()});

    log::debug("batch %u iter %u mean residual %.6g swept %llu", batch.index, t,
               im.mean_residual,
               static_cast<unsigned long long>(im.swept_entries));

    if (im.mean_residual < cfg.epsilon || t == cfg.max_iters) break;
    if (!always_full)
      power = select_power_set(base.residual, cfg.ratios(), t + 1);
  }

  stats = std::move(base);
  return metrics;
}

TrainResult run_pobp(const SparseCorpus& train, const TrainConfig& cfg,
                     const RunHooks* hooks) {
  cfg.validate();
  if (train.vocab_size == 0) throw ConfigError("empty vocabulary");
  const auto batches = make_minibatches(train, cfg.minibatch_target_nnz);
  if (batches.empty()) throw ConfigError("corpus holds no trainable documents");

  memtrack::reset_peak();
  TrainResult result;
  result.stats = GlobalStats(train.vocab_size, cfg.topics);

  for (const MiniBatch& batch : batches) {
    auto batch_metrics =
        run_minibatch(batch, result.stats, cfg, result.ledger, hooks);

    BatchSummary s;
    s.minibatch = batch.index;
    s.iterations = static_cast<uint32_t>(batch_metrics.size());
    s.final_mean_residual = batch_metrics.back().mean_residual;
    s.num_docs = static_cast<uint32_t>(batch.doc_ids.size());
    s.nnz = batch.nnz();
    s.num_tokens = batch.num_tokens;
    result.batches.push_back(s);

    for (const auto& im : batch_metrics) {
      result.sweep_seconds += im.sweep_seconds;
      result.sync_seconds += im.sync_seconds;
      result.fallback_updates += im.fallback_updates;
    }
    result.iterations.insert(result.iterations.end(), batch_metrics.begin(),
                             batch_metrics.end());

    log::info("mini-batch %u/%zu: %u iterations, mean residual %.6g",
              batch.index, batches.size(), s.iterations,
              s.final_mean_residual);

    if (hooks && hooks->on_batch_end) hooks->on_batch_end(batch.index, result.stats);
  }

  result.peak_tracked_bytes = memtrack::peak();
  return result;
}

}  // namespace pobp
