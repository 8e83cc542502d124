#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "corpus.h"
#include "matrix.h"
#include "memtrack.h"

namespace pobp {

struct Hyperparams {
  uint32_t topics = 0;
  double alpha = 0.0;  // document-topic smoothing
  double beta = 0.0;   // topic-word smoothing

  void validate() const;
};

// Per-entry topic responsibility vectors for one shard, stored flat
// (entry-major, topics contiguous). Registered with the memory gauge: this
// is the dominant per-batch allocation the streaming contract bounds.
class MessageBlock {
public:
  MessageBlock() = default;
  MessageBlock(size_t entry_count, uint32_t topics)
      : topics_(topics),
        values_(entry_count * topics, 0.0),
        tracked_(entry_count * topics * sizeof(double)) {}

  size_t entry_count() const {
    return topics_ ? values_.size() / topics_ : 0;
  }
  uint32_t topics() const { return topics_; }

  std::span<double> at(size_t entry) {
    return {values_.data() + entry * topics_, topics_};
  }
  std::span<const double> at(size_t entry) const {
    return {values_.data() + entry * topics_, topics_};
  }

private:
  uint32_t topics_ = 0;
  std::vector<double> values_;
  memtrack::TrackedBytes tracked_;
};

// Per-document topic mass sums for one shard (theta-hat rows). Rows follow
// shard.doc_ids order. Also gauge-registered.
class DocTopicStats {
public:
  DocTopicStats() = default;
  DocTopicStats(std::vector<uint32_t> doc_ids, uint32_t topics)
      : doc_ids_(std::move(doc_ids)),
        topics_(topics),
        values_(doc_ids_.size() * topics, 0.0),
        tracked_(doc_ids_.size() * topics * sizeof(double)) {}

  size_t doc_count() const { return doc_ids_.size(); }
  uint32_t topics() const { return topics_; }
  const std::vector<uint32_t>& doc_ids() const { return doc_ids_; }

  std::span<double> row(size_t local_doc) {
    return {values_.data() + local_doc * topics_, topics_};
  }
  std::span<const double> row(size_t local_doc) const {
    return {values_.data() + local_doc * topics_, topics_};
  }

private:
  std::vector<uint32_t> doc_ids_;
  uint32_t topics_ = 0;
  std::vector<double> values_;
  memtrack::TrackedBytes tracked_;
};

// Shared sufficient statistics: accumulated per-(word, topic) token mass,
// the matching per-(word, topic) residuals, and per-topic totals.
struct GlobalStats {
  Matrix word_topic;                 // rows = words, cols = topics
  Matrix residual;                   // same shape
  std::vector<double> topic_totals;  // column sums of word_topic

  GlobalStats() = default;
  GlobalStats(uint32_t vocab, uint32_t topics)
      : word_topic(vocab, topics),
        residual(vocab, topics),
        topic_totals(topics, 0.0) {}

  uint32_t vocab_size() const { return static_cast<uint32_t>(word_topic.rows()); }
  uint32_t topics() const { return static_cast<uint32_t>(word_topic.cols()); }

  // Moves one entry's contribution from old_msg to new_msg over the selected
  // topics: word_topic(word, k) += x * (new - old), topic totals follow.
  // Raises AccountingError if a cell would go negative beyond tolerance.
  void apply_message_delta(uint32_t word, double x,
                           std::span<const double> old_msg,
                           std::span<const double> new_msg,
                           std::span<const uint32_t> selected);
};

// Messages for a shard, one normalized topic vector per entry, drawn from a
// stream keyed by (seed, doc, word) so the same entry receives the same
// vector under any sharding.
MessageBlock init_messages(const Shard& shard, uint32_t topics, uint64_t seed);

// Theta-hat rows rebuilt from scratch: row(d, k) = sum_w x * message(k).
DocTopicStats rebuild_doc_topic(const Shard& shard, const MessageBlock& messages,
                                uint32_t topics);

// One message update. Reads the entry's document row (live) and the shared
// stats snapshot (frozen at the last barrier), excludes the entry's own old
// contribution from every term, and writes the refreshed message into
// new_msg. Topics outside `selected` keep their old values exactly; the
// selected components are rescaled so the vector still sums to one. Returns
// true if the raw scores degenerated to all-zero and the selected mass was
// spread uniformly instead.
bool update_message(uint32_t word, double x, std::span<double> doc_row,
                    const GlobalStats& base, std::span<const double> old_msg,
                    std::span<const uint32_t> selected, const Hyperparams& hp,
                    std::span<double> new_msg);

// Residual of one entry: r(k) = x * |new(k) - old(k)|.
void compute_residual(double x, std::span<const double> old_msg,
                      std::span<const double> new_msg, std::span<double> out);

// Step size of the stochastic schedule, 1/(m-1) for mini-batch m >= 2. The
// engine itself accumulates unscaled statistics (estimation is invariant to
// their scale); this exists for the schedule's convergence checks.
double learning_rate(uint32_t minibatch);

// Average residual mass per token.
double mean_residual(const GlobalStats& stats, uint64_t token_count);

// Smoothed per-topic normalization of accumulated word-topic mass:
// phi_w(k) = (mass(w,k) + beta) / (column total + W*beta), so every column
// sums to one over words and unseen words keep a floor probability. beta=0
// gives the plain ratio (an empty topic then falls back to uniform).
Matrix normalize_topics(const Matrix& word_topic, double beta);

// Estimates one document's topic proportions against a fixed normalized
// topic-word matrix: seeded message init, `iters` sweeps updating only the
// document side, then theta(k) proportional to theta_hat(k) + alpha.
// doc_entries must all belong to one document. An empty document returns the
// uniform vector.
std::vector<double> fold_in_theta(std::span<const CorpusEntry> doc_entries,
                                  const Matrix& topic_word_norm,
                                  const Hyperparams& hp, uint32_t iters,
                                  uint64_t seed);

// exp(- sum x * log(sum_k theta_d(k) phi_w(k)) / sum x) over the given test
// entries; thetas is indexed by document id. Probabilities are floored at
// 1e-12. Raises NumericError when the test set holds no tokens.
double predictive_perplexity(std::span<const CorpusEntry> test_entries,
                             const std::vector<std::vector<double>>& thetas,
                             const Matrix& topic_word_norm);

// Relative improvement of p_new over p_ref, in percent.
double perplexity_gap(double p_ref, double p_new);

}  // namespace pobp
