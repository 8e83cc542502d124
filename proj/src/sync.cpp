#include "sync.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <ostream>

#include "errors.h"

namespace pobp {

namespace {

constexpr double kAccountingTol = 1e-6;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

uint64_t get_u64(std::span<const uint8_t> b, size_t off) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[off + i];
  return v;
}

double get_f32(std::span<const uint8_t> b, size_t off) {
  return static_cast<double>(std::bit_cast<float>(get_u32(b, off)));
}

}  // namespace

SyncScope SyncScope::full(uint32_t vocab, uint32_t topics) {
  SyncScope s;
  s.full_ = true;
  s.vocab_ = vocab;
  s.topics_ = topics;
  return s;
}

SyncScope SyncScope::subset(const PowerSet& ps) {
  SyncScope s;
  s.full_ = false;
  s.words_ = ps.words;
  s.topics_per_word_ = ps.topics;
  return s;
}

size_t SyncScope::cell_count() const {
  if (full_) return static_cast<size_t>(vocab_) * topics_;
  size_t n = 0;
  for (const auto& t : topics_per_word_) n += t.size();
  return n;
}

const std::vector<int32_t>& SyncScope::word_slot(uint32_t vocab) const {
  if (word_slot_.empty()) {
    word_slot_.assign(vocab, -1);
    if (full_) {
      for (uint32_t w = 0; w < vocab; ++w) word_slot_[w] = static_cast<int32_t>(w);
    } else {
      for (size_t i = 0; i < words_.size(); ++i)
        word_slot_[words_[i]] = static_cast<int32_t>(i);
    }
  }
  return word_slot_;
}

std::vector<uint8_t> SyncPayload::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(byte_size());
  put_u32(out, iteration);
  put_u32(out, worker_id);
  put_u64(out, wire_entry_count());
  for (const SyncCell& c : cells) {
    put_u32(out, c.word + 1);
    put_u32(out, c.topic + 1);
    put_f32(out, c.word_topic_value);
    put_u32(out, c.word + 1);
    put_u32(out, c.topic + 1);
    put_f32(out, c.residual_value);
  }
  return out;
}

SyncPayload SyncPayload::deserialize(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) throw ProtocolError("payload shorter than its header");
  SyncPayload p;
  p.iteration = get_u32(bytes, 0);
  p.worker_id = get_u32(bytes, 4);
  const uint64_t entries = get_u64(bytes, 8);
  if (entries % 2 != 0)
    throw ProtocolError("payload entry count must be even (two per cell)");
  if (bytes.size() != 16 + 12 * entries)
    throw ProtocolError("payload length does not match its entry count");
  p.cells.reserve(entries / 2);
  size_t off = 16;
  for (uint64_t i = 0; i < entries / 2; ++i) {
    SyncCell c{};
    const uint32_t w1 = get_u32(bytes, off);
    const uint32_t k1 = get_u32(bytes, off + 4);
    c.word_topic_value = get_f32(bytes, off + 8);
    const uint32_t w2 = get_u32(bytes, off + 12);
    const uint32_t k2 = get_u32(bytes, off + 16);
    c.residual_value = get_f32(bytes, off + 20);
    if (w1 != w2 || k1 != k2)
      throw ProtocolError("cell pair addresses disagree");
    if (w1 == 0 || k1 == 0) throw ProtocolError("wire ids are 1-based");
    c.word = w1 - 1;
    c.topic = k1 - 1;
    p.cells.push_back(c);
    off += 24;
  }
  return p;
}

uint64_t CommLedger::total_bytes() const {
  uint64_t n = 0;
  for (const auto& r : records_) n += r.bytes;
  return n;
}

void CommLedger::write_csv(std::ostream& os) const {
  os << "minibatch,iteration,worker,direction,entries,bytes\n";
  for (const auto& r : records_)
    os << r.minibatch << ',' << r.iteration << ',' << r.worker << ','
       << (r.direction == LedgerRecord::Direction::up ? "up" : "down") << ','
       << r.entries << ',' << r.bytes << '\n';
}

LedgerSummary ledger_summary(const CommLedger& ledger, uint32_t topics,
                             uint32_t vocab, uint32_t workers) {
  LedgerSummary s;
  s.per_worker_bytes.assign(workers, 0);
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> partial_up_entries;
  for (const auto& r : ledger.records()) {
    s.total_bytes += r.bytes;
    if (r.direction == LedgerRecord::Direction::up)
      s.up_bytes += r.bytes;
    else
      s.down_bytes += r.bytes;
    if (r.iteration <= 1)
      s.full_sweep_bytes += r.bytes;
    else
      s.partial_sweep_bytes += r.bytes;
    if (r.worker >= 1 && r.worker <= workers)
      s.per_worker_bytes[r.worker - 1] += r.bytes;
    if (r.iteration >= 2 && r.direction == LedgerRecord::Direction::up)
      partial_up_entries[{r.minibatch, r.iteration}] += r.entries;
  }
  s.partial_barriers = partial_up_entries.size();
  if (!partial_up_entries.empty()) {
    const double full = 2.0 * static_cast<double>(topics) * vocab *
                        static_cast<double>(workers);
    double acc = 0.0;
    for (const auto& [key, entries] : partial_up_entries)
      acc += static_cast<double>(entries) / full;
    s.partial_entry_ratio = acc / static_cast<double>(partial_up_entries.size());
  }
  return s;
}

MergeResult sync_matrices(const GlobalStats& base,
                          const std::vector<GlobalStats>& replicas,
                          const SyncScope& scope, uint32_t iteration) {
  if (replicas.empty()) throw ProtocolError("no replicas to merge");
  const uint32_t vocab = base.vocab_size();
  const uint32_t topics = base.topics();

  // Outside the scope a replica must still be the bitwise copy of the base
  // it started the sweep from.
  if (!scope.is_full()) {
    std::vector<uint8_t> in_scope(static_cast<size_t>(vocab) * topics, 0);
    scope.for_each_cell([&](uint32_t w, uint32_t k) {
      in_scope[static_cast<size_t>(w) * topics + k] = 1;
    });
    for (size_t n = 0; n < replicas.size(); ++n) {
      const auto rep_wt = replicas[n].word_topic.flat();
      const auto rep_r = replicas[n].residual.flat();
      const auto base_wt = base.word_topic.flat();
      const auto base_r = base.residual.flat();
      for (size_t i = 0; i < in_scope.size(); ++i) {
        if (in_scope[i]) continue;
        if (rep_wt[i] != base_wt[i] || rep_r[i] != base_r[i])
          throw ProtocolError(
              "worker " + std::to_string(n + 1) + " replica diverged outside "
              "the sync scope at iteration " + std::to_string(iteration));
      }
    }
  }

  // Start from the base: cells outside the scope keep their previous values
  // (word-topic mass and residuals alike), in-scope cells are overwritten
  // below.
  MergeResult result;
  result.merged = base;

  result.up_payloads.resize(replicas.size());
  for (size_t n = 0; n < replicas.size(); ++n) {
    result.up_payloads[n].iteration = iteration;
    result.up_payloads[n].worker_id = static_cast<uint32_t>(n + 1);
    result.up_payloads[n].cells.reserve(scope.cell_count());
  }
  result.down_payload.iteration = iteration;
  result.down_payload.cells.reserve(scope.cell_count());

  scope.for_each_cell([&](uint32_t w, uint32_t k) {
    const double base_wt = base.word_topic(w, k);
    double acc = base_wt;
    double res = 0.0;
    for (size_t n = 0; n < replicas.size(); ++n) {
      const double delta = replicas[n].word_topic(w, k) - base_wt;
      const double fresh = replicas[n].residual(w, k);
      acc += delta;
      res += fresh;
      result.up_payloads[n].cells.push_back({w, k, delta, fresh});
    }
    if (acc < -kAccountingTol)
      throw AccountingError("merged word-topic mass went negative at word " +
                            std::to_string(w) + " topic " + std::to_string(k));
    if (acc < 0.0) acc = 0.0;
    result.merged.topic_totals[k] += acc - base_wt;
    result.merged.word_topic(w, k) = acc;
    result.merged.residual(w, k) = res;
    result.down_payload.cells.push_back({w, k, acc, res});
  });

  return result;
}

}  // namespace pobp
