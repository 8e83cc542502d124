#pragma once

#include <cstdint>
#include <vector>

#include "corpus.h"
#include "inference.h"
#include "matrix.h"

namespace pobp {

struct EvalResult {
  double perplexity = 0.0;
  std::size_t eval_docs = 0;      // documents that contributed test tokens
  std::size_t test_tokens = 0;
};

// Held-out evaluation: fold the observed part of each document into the
// (raw, unnormalized) word-topic stats, then score the held-out part.
// eval_doc_limit == 0 means "all documents"; otherwise only the first
// `eval_doc_limit` documents that have test tokens are scored.
EvalResult evaluate_split(const SparseCorpus& fold_part,
                          const SparseCorpus& test_part,
                          const Matrix& word_topic_raw, const Hyperparams& hp,
                          std::size_t fold_in_iters, uint64_t seed,
                          std::size_t eval_doc_limit = 0);

}  // namespace pobp
