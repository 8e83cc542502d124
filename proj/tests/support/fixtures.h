#pragma once

#include <string>
#include <utility>

#include "corpus.h"

namespace fixtures {

// Two documents over a three-word vocabulary; small enough to check message
// updates by hand.
//   doc 1: word 1 x2, word 2 x1
//   doc 2: word 2 x3, word 3 x1
pobp::SparseCorpus micro();

// Synthetic desk-scale corpus: 2000 documents over a 2000-word vocabulary
// with Zipf-distributed word frequencies and 20 planted topic blocks, about
// 120k nonzero entries (three mini-batches at the default target). Fully
// deterministic; repeated calls build the identical corpus.
pobp::SparseCorpus desk();

// Writes the corpus in the bag-of-words text format under dir (created if
// missing).
struct UciPaths {
  std::string docword;
  std::string vocab;
};
UciPaths write_uci(const pobp::SparseCorpus& c, const std::string& dir,
                   const std::string& stem = "corpus");

// Fresh scratch directory under the system temp root; unique per call.
std::string scratch_dir(const std::string& tag);

}  // namespace fixtures
