#include "support/fixtures.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <unistd.h>

#include "rng.h"

namespace fs = std::filesystem;

namespace fixtures {

pobp::SparseCorpus micro() {
  pobp::SparseCorpus c;
  c.num_docs = 2;
  c.vocab_size = 3;
  c.vocab = {"alpha", "bravo", "charlie"};
  c.entries = {{0, 0, 2}, {0, 1, 1}, {1, 1, 3}, {1, 2, 1}};
  c.num_tokens = 7;
  return c;
}

namespace {

constexpr uint32_t kDocs = 2000;
constexpr uint32_t kVocab = 2000;
constexpr uint32_t kTopics = 20;   // planted blocks, not the model's K
constexpr uint32_t kBlock = kVocab / kTopics;
constexpr uint64_t kSeed = 0xD35C0;

// Per-topic cumulative word distributions: Zipf-weighted vocabulary with a
// strong boost inside the topic's own block of words.
std::vector<std::vector<double>> topic_cdfs() {
  std::vector<double> zipf(kVocab);
  for (uint32_t w = 0; w < kVocab; ++w)
    zipf[w] = 1.0 / std::pow(static_cast<double>(w + 1), 1.05);

  std::vector<std::vector<double>> cdfs(kTopics,
                                        std::vector<double>(kVocab, 0.0));
  for (uint32_t k = 0; k < kTopics; ++k) {
    double acc = 0.0;
    for (uint32_t w = 0; w < kVocab; ++w) {
      const double boost = (w / kBlock == k) ? 12.0 : 1.0;
      acc += zipf[w] * boost;
      cdfs[k][w] = acc;
    }
    for (uint32_t w = 0; w < kVocab; ++w) cdfs[k][w] /= acc;
  }
  return cdfs;
}

}  // namespace

pobp::SparseCorpus desk() {
  const auto cdfs = topic_cdfs();

  pobp::SparseCorpus c;
  c.num_docs = kDocs;
  c.vocab_size = kVocab;
  c.vocab.reserve(kVocab);
  for (uint32_t w = 0; w < kVocab; ++w)
    c.vocab.push_back("word" + std::to_string(w + 1));

  for (uint32_t d = 0; d < kDocs; ++d) {
    pobp::KeyedRng rng(kSeed, pobp::rng_stream::corpus_synth, d, 0);

    // One or two active topics with random mixture weights.
    const uint32_t active = 1 + static_cast<uint32_t>(rng.below(2));
    uint32_t topic_of[2] = {0, 0};
    double weight_of[2] = {0.0, 0.0};
    double wsum = 0.0;
    for (uint32_t i = 0; i < active; ++i) {
      topic_of[i] = static_cast<uint32_t>(rng.below(kTopics));
      weight_of[i] = rng.uniform01();
      wsum += weight_of[i];
    }

    const uint32_t length = 40 + static_cast<uint32_t>(rng.below(41));
    std::map<uint32_t, uint32_t> counts;
    for (uint32_t i = 0; i < length; ++i) {
      double pick = rng.uniform01() * wsum;
      uint32_t topic = topic_of[active - 1];
      for (uint32_t j = 0; j < active; ++j) {
        if (pick <= weight_of[j]) {
          topic = topic_of[j];
          break;
        }
        pick -= weight_of[j];
      }
      const auto& cdf = cdfs[topic];
      const double u = rng.uniform01();
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const auto word = static_cast<uint32_t>(it - cdf.begin());
      ++counts[std::min(word, kVocab - 1)];
    }
    for (const auto& [word, count] : counts) {
      c.entries.push_back({d, word, count});
      c.num_tokens += count;
    }
  }
  return c;
}

UciPaths write_uci(const pobp::SparseCorpus& c, const std::string& dir,
                   const std::string& stem) {
  fs::create_directories(dir);
  const std::string docword = dir + "/docword." + stem + ".txt";
  const std::string vocab = dir + "/vocab." + stem + ".txt";
  pobp::save_uci_bow(c, docword, vocab);
  return {docword, vocab};
}

std::string scratch_dir(const std::string& tag) {
  static std::atomic<uint64_t> counter{0};
  const auto n = counter.fetch_add(1);
  fs::path p = fs::temp_directory_path() /
               ("pobp_tests_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(n));
  fs::create_directories(p);
  return p.string();
}

}  // namespace fixtures
