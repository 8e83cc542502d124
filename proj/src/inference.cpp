#include "inference.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "errors.h"
#include "rng.h"

namespace pobp {

namespace {
constexpr double kAccountingTol = 1e-6;
constexpr double kProbFloor = 1e-12;
}  // namespace

void Hyperparams::validate() const {
  if (topics == 0) throw ConfigError("topics must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
}

void GlobalStats::apply_message_delta(uint32_t word, double x,
                                      std::span<const double> old_msg,
                                      std::span<const double> new_msg,
                                      std::span<const uint32_t> selected) {
  auto row = word_topic.row(word);
  for (uint32_t k : selected) {
    const double d = x * (new_msg[k] - old_msg[k]);
    const double v = row[k] + d;
    if (v < -kAccountingTol)
      throw AccountingError("word-topic mass for word " + std::to_string(word) +
                            " topic " + std::to_string(k) +
                            " went negative: " + std::to_string(v));
    if (v < 0.0) {
      topic_totals[k] -= row[k];
      row[k] = 0.0;
    } else {
      topic_totals[k] += d;
      row[k] = v;
    }
  }
}

MessageBlock init_messages(const Shard& shard, uint32_t topics, uint64_t seed) {
  MessageBlock block(shard.entries.size(), topics);
  for (size_t i = 0; i < shard.entries.size(); ++i) {
    const CorpusEntry& e = shard.entries[i];
    KeyedRng rng(seed, rng_stream::message_init, e.doc, e.word);
    auto msg = block.at(i);
    double sum = 0.0;
    for (uint32_t k = 0; k < topics; ++k) {
      msg[k] = rng.uniform01();
      sum += msg[k];
    }
    for (uint32_t k = 0; k < topics; ++k) msg[k] /= sum;
  }
  return block;
}

DocTopicStats rebuild_doc_topic(const Shard& shard, const MessageBlock& messages,
                                uint32_t topics) {
  DocTopicStats stats(shard.doc_ids, topics);
  size_t local_doc = 0;
  for (size_t i = 0; i < shard.entries.size(); ++i) {
    const CorpusEntry& e = shard.entries[i];
    while (local_doc < stats.doc_count() &&
           stats.doc_ids()[local_doc] != e.doc)
      ++local_doc;
    auto row = stats.row(local_doc);
    auto msg = messages.at(i);
    const auto x = static_cast<double>(e.count);
    for (uint32_t k = 0; k < topics; ++k) row[k] += x * msg[k];
  }
  return stats;
}

bool update_message(uint32_t word, double x, std::span<double> doc_row,
                    const GlobalStats& base, std::span<const double> old_msg,
                    std::span<const uint32_t> selected, const Hyperparams& hp,
                    std::span<double> new_msg) {
  const auto phi_row = base.word_topic.row(word);
  const double wbeta = static_cast<double>(base.vocab_size()) * hp.beta;

  if (selected.size() < new_msg.size())
    std::copy(old_msg.begin(), old_msg.end(), new_msg.begin());

  double sum_sel_old = 0.0;
  double sum_raw = 0.0;
  for (uint32_t k : selected) {
    const double o = old_msg[k];
    sum_sel_old += o;
    const double excl = x * o;
    double th = doc_row[k] - excl;
    if (th < 0.0) th = 0.0;
    double ph = phi_row[k] - excl;
    if (ph < 0.0) ph = 0.0;
    double tot = base.topic_totals[k] - excl;
    if (tot < 0.0) tot = 0.0;
    const double raw = (th + hp.alpha) * (ph + hp.beta) / (tot + wbeta);
    new_msg[k] = raw;
    sum_raw += raw;
  }

  // Mass held by the frozen components stays put, so the refreshed selected
  // components redistribute exactly the mass the old selected ones held.
  if (sum_raw > 0.0) {
    const double scale = sum_sel_old / sum_raw;
    for (uint32_t k : selected) new_msg[k] *= scale;
    return false;
  }
  const double uniform = sum_sel_old / static_cast<double>(selected.size());
  for (uint32_t k : selected) new_msg[k] = uniform;
  return true;
}

void compute_residual(double x, std::span<const double> old_msg,
                      std::span<const double> new_msg, std::span<double> out) {
  for (size_t k = 0; k < out.size(); ++k)
    out[k] = x * std::abs(new_msg[k] - old_msg[k]);
}

double learning_rate(uint32_t minibatch) {
  if (minibatch < 2)
    throw NumericError("learning rate is defined for mini-batch >= 2");
  return 1.0 / static_cast<double>(minibatch - 1);
}

double mean_residual(const GlobalStats& stats, uint64_t token_count) {
  if (token_count == 0)
    throw NumericError("mean residual undefined for zero tokens");
  double sum = 0.0;
  for (double v : stats.residual.flat()) sum += v;
  return sum / static_cast<double>(token_count);
}

Matrix normalize_topics(const Matrix& word_topic, double beta) {
  if (beta < 0.0) throw NumericError("beta must be nonnegative");
  const size_t vocab = word_topic.rows();
  const size_t topics = word_topic.cols();
  Matrix out(vocab, topics);
  std::vector<double> denom(topics, 0.0);
  for (size_t w = 0; w < vocab; ++w) {
    auto row = word_topic.row(w);
    for (size_t k = 0; k < topics; ++k) denom[k] += row[k];
  }
  const double smoothing = beta * static_cast<double>(vocab);
  for (size_t k = 0; k < topics; ++k) denom[k] += smoothing;
  for (size_t w = 0; w < vocab; ++w) {
    auto in = word_topic.row(w);
    auto o = out.row(w);
    for (size_t k = 0; k < topics; ++k)
      o[k] = denom[k] > 0.0 ? (in[k] + beta) / denom[k]
                            : 1.0 / static_cast<double>(vocab);
  }
  return out;
}

std::vector<double> fold_in_theta(std::span<const CorpusEntry> doc_entries,
                                  const Matrix& topic_word_norm,
                                  const Hyperparams& hp, uint32_t iters,
                                  uint64_t seed) {
  const uint32_t K = hp.topics;
  std::vector<double> theta(K, 1.0 / static_cast<double>(K));
  if (doc_entries.empty()) return theta;

  const size_t n = doc_entries.size();
  std::vector<double> messages(n * K);
  std::vector<double> theta_hat(K, 0.0);
  double tokens = 0.0;

  for (size_t i = 0; i < n; ++i) {
    const CorpusEntry& e = doc_entries[i];
    KeyedRng rng(seed, rng_stream::fold_in, e.doc, e.word);
    double sum = 0.0;
    for (uint32_t k = 0; k < K; ++k) {
      messages[i * K + k] = rng.uniform01();
      sum += messages[i * K + k];
    }
    const auto x = static_cast<double>(e.count);
    tokens += x;
    for (uint32_t k = 0; k < K; ++k) {
      messages[i * K + k] /= sum;
      theta_hat[k] += x * messages[i * K + k];
    }
  }

  std::vector<double> fresh(K);
  for (uint32_t it = 0; it < iters; ++it) {
    for (size_t i = 0; i < n; ++i) {
      const CorpusEntry& e = doc_entries[i];
      const auto x = static_cast<double>(e.count);
      double* msg = messages.data() + i * K;
      auto phi_row = topic_word_norm.row(e.word);
      double sum = 0.0;
      for (uint32_t k = 0; k < K; ++k) {
        double th = theta_hat[k] - x * msg[k];
        if (th < 0.0) th = 0.0;
        fresh[k] = (th + hp.alpha) * phi_row[k];
        sum += fresh[k];
      }
      if (sum > 0.0) {
        for (uint32_t k = 0; k < K; ++k) fresh[k] /= sum;
      } else {
        std::fill(fresh.begin(), fresh.end(), 1.0 / static_cast<double>(K));
      }
      for (uint32_t k = 0; k < K; ++k) {
        theta_hat[k] += x * (fresh[k] - msg[k]);
        msg[k] = fresh[k];
      }
    }
  }

  const double denom = tokens + static_cast<double>(K) * hp.alpha;
  for (uint32_t k = 0; k < K; ++k) theta[k] = (theta_hat[k] + hp.alpha) / denom;
  return theta;
}

double predictive_perplexity(std::span<const CorpusEntry> test_entries,
                             const std::vector<std::vector<double>>& thetas,
                             const Matrix& topic_word_norm) {
  const size_t topics = topic_word_norm.cols();
  double log_sum = 0.0;
  double tokens = 0.0;
  for (const CorpusEntry& e : test_entries) {
    const std::vector<double>& theta = thetas[e.doc];
    auto phi_row = topic_word_norm.row(e.word);
    double p = 0.0;
    for (size_t k = 0; k < topics; ++k) p += theta[k] * phi_row[k];
    if (p < kProbFloor) p = kProbFloor;
    const auto x = static_cast<double>(e.count);
    log_sum += x * std::log(p);
    tokens += x;
  }
  if (tokens == 0.0)
    throw NumericError("predictive perplexity undefined for an empty test set");
  return std::exp(-log_sum / tokens);
}

double perplexity_gap(double p_ref, double p_new) {
  if (!(p_ref > 0.0))
    throw NumericError("perplexity gap needs a positive reference");
  return (p_ref - p_new) / p_ref * 100.0;
}

}  // namespace pobp
