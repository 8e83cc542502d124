#include "eval.h"

#include <span>

#include "errors.h"

namespace pobp {

EvalResult evaluate_split(const SparseCorpus& fold_part,
                          const SparseCorpus& test_part,
                          const Matrix& word_topic_raw, const Hyperparams& hp,
                          std::size_t fold_in_iters, uint64_t seed,
                          std::size_t eval_doc_limit) {
  if (word_topic_raw.cols() != hp.topics)
    throw ConfigError("word-topic stats disagree with configured topic count");

  const Matrix phi = normalize_topics(word_topic_raw, hp.beta);
  const uint32_t num_docs =
      std::max(fold_part.num_docs, test_part.num_docs);

  // Both parts keep entries sorted by (doc, word); slice the observed part
  // into per-document ranges.
  std::vector<std::pair<std::size_t, std::size_t>> fold_range(
      num_docs, {0, 0});
  for (std::size_t i = 0; i < fold_part.entries.size();) {
    std::size_t j = i;
    const uint32_t d = fold_part.entries[i].doc;
    while (j < fold_part.entries.size() && fold_part.entries[j].doc == d) ++j;
    fold_range[d] = {i, j};
    i = j;
  }

  // Score the first eval_doc_limit documents that hold test tokens (all of
  // them when the limit is zero).
  std::vector<char> scored_doc(num_docs, 0);
  std::size_t picked = 0;
  {
    uint32_t last = UINT32_MAX;
    for (const auto& e : test_part.entries) {
      if (e.doc == last) continue;
      last = e.doc;
      if (eval_doc_limit != 0 && picked >= eval_doc_limit) break;
      scored_doc[e.doc] = 1;
      ++picked;
    }
  }
  if (picked == 0)
    throw NumericError("no documents with held-out tokens to evaluate");

  std::vector<std::vector<double>> thetas(num_docs);
  for (uint32_t d = 0; d < num_docs; ++d) {
    if (!scored_doc[d]) continue;
    auto [lo, hi] = fold_range[d];
    std::span<const CorpusEntry> observed(fold_part.entries.data() + lo,
                                          hi - lo);
    thetas[d] = fold_in_theta(observed, phi, hp, fold_in_iters, seed);
  }

  std::vector<CorpusEntry> scored;
  std::size_t test_tokens = 0;
  for (const auto& e : test_part.entries) {
    if (!scored_doc[e.doc]) continue;
    scored.push_back(e);
    test_tokens += e.count;
  }

  EvalResult result;
  result.perplexity = predictive_perplexity(scored, thetas, phi);
  result.eval_docs = picked;
  result.test_tokens = test_tokens;
  return result;
}

}  // namespace pobp
