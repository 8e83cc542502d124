#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "inference.h"
#include "scheduler.h"

namespace pobp {

// The cells exchanged at a barrier: every (word, topic) pair on the first
// sweep, the power set afterwards. Cells enumerate words ascending, topics
// ascending within a word.
class SyncScope {
public:
  static SyncScope full(uint32_t vocab, uint32_t topics);
  static SyncScope subset(const PowerSet& ps);

  bool is_full() const { return full_; }
  size_t cell_count() const;

  template <typename F>
  void for_each_cell(F&& f) const {
    if (full_) {
      for (uint32_t w = 0; w < vocab_; ++w)
        for (uint32_t k = 0; k < topics_; ++k) f(w, k);
    } else {
      for (size_t i = 0; i < words_.size(); ++i)
        for (uint32_t k : topics_per_word_[i]) f(words_[i], k);
    }
  }

  // Word -> index into the scope's word list, or -1.
  const std::vector<int32_t>& word_slot(uint32_t vocab) const;
  std::span<const uint32_t> topics_of_slot(size_t slot) const {
    return topics_per_word_[slot];
  }
  std::span<const uint32_t> words() const { return words_; }

private:
  bool full_ = true;
  uint32_t vocab_ = 0;
  uint32_t topics_ = 0;
  std::vector<uint32_t> words_;
  std::vector<std::vector<uint32_t>> topics_per_word_;
  mutable std::vector<int32_t> word_slot_;
};

// One worker's barrier message. Up payloads carry the worker's word-topic
// deltas and freshly accumulated residuals for the scope cells; down
// payloads carry the merged values back. Each cell costs two wire entries
// (one per matrix), so a payload serializes to
//   16 header bytes + 12 bytes * 2 * cells.
struct SyncCell {
  uint32_t word;
  uint32_t topic;
  double word_topic_value;
  double residual_value;
};

struct SyncPayload {
  uint32_t iteration = 0;
  uint32_t worker_id = 0;
  std::vector<SyncCell> cells;

  uint64_t wire_entry_count() const { return 2ull * cells.size(); }
  uint64_t byte_size() const { return 16ull + 12ull * wire_entry_count(); }

  // Little-endian: u32 iteration, u32 worker_id, u64 entry count, then
  // entry_count * (u32 word, u32 topic, f32 value) with 1-based word and
  // topic ids. The two entries of a cell are adjacent: word-topic value
  // first, residual second. Values travel as single-precision floats; the
  // in-process merge keeps doubles, the wire exists for byte accounting.
  std::vector<uint8_t> serialize() const;
  static SyncPayload deserialize(std::span<const uint8_t> bytes);
};

struct LedgerRecord {
  uint32_t minibatch;
  uint32_t iteration;
  uint32_t worker;
  enum class Direction { up, down } direction;
  uint64_t entries;  // wire entries
  uint64_t bytes;
};

class CommLedger {
public:
  void append(const LedgerRecord& r) { records_.push_back(r); }
  const std::vector<LedgerRecord>& records() const { return records_; }
  uint64_t total_bytes() const;
  void write_csv(std::ostream& os) const;

private:
  std::vector<LedgerRecord> records_;
};

struct LedgerSummary {
  uint64_t total_bytes = 0;
  uint64_t up_bytes = 0;
  uint64_t down_bytes = 0;
  uint64_t full_sweep_bytes = 0;     // iteration 1 barriers
  uint64_t partial_sweep_bytes = 0;  // iteration >= 2 barriers
  std::vector<uint64_t> per_worker_bytes;  // index worker_id - 1
  // Mean over iteration >= 2 barriers of synced wire entries relative to a
  // full exchange (2 * K * W per worker per direction).
  double partial_entry_ratio = 0.0;
  uint64_t partial_barriers = 0;
};

LedgerSummary ledger_summary(const CommLedger& ledger, uint32_t topics,
                             uint32_t vocab, uint32_t workers);

// Merges worker replicas into the next shared snapshot. Word-topic cells
// combine as base + sum of per-worker deltas (ascending worker id); residual
// cells hold each worker's freshly accumulated values for this sweep and
// merge as their plain sum. Outside the scope the merged stats equal the
// base, and every replica is checked against the base there: divergence is a
// protocol violation. Returns the merged stats plus the per-worker up
// payloads (the down payload is the merged scope, identical per worker).
struct MergeResult {
  GlobalStats merged;
  std::vector<SyncPayload> up_payloads;
  SyncPayload down_payload;  // worker_id 0; re-addressed per worker
};

MergeResult sync_matrices(const GlobalStats& base,
                          const std::vector<GlobalStats>& replicas,
                          const SyncScope& scope, uint32_t iteration);

}  // namespace pobp
