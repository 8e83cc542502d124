#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pobp {

// One nonzero cell of the document-word count matrix. Indices are 0-based
// in memory; the UCI bag-of-words files are 1-based and the loaders/savers
// convert at the boundary.
struct CorpusEntry {
  uint32_t doc = 0;
  uint32_t word = 0;
  uint32_t count = 0;
};

struct SparseCorpus {
  uint32_t num_docs = 0;
  uint32_t vocab_size = 0;
  std::vector<std::string> vocab;        // size vocab_size
  std::vector<CorpusEntry> entries;      // sorted by (doc, word), counts > 0
  uint64_t num_tokens = 0;               // sum of counts

  size_t nnz() const { return entries.size(); }
};

// UCI bag-of-words reader. docword: three header lines (D, W, NNZ) followed
// by NNZ body lines "doc word count" with 1-based ids; vocab: one word per
// line, exactly W lines. Duplicate (doc, word) pairs are summed. Malformed
// input raises ParseError naming the offending line; unreadable paths raise
// IoError.
SparseCorpus load_uci_bow(const std::string& docword_path,
                          const std::string& vocab_path);

void save_uci_bow(const SparseCorpus& corpus, const std::string& docword_path,
                  const std::string& vocab_path);

// Keeps the keep_top most frequent words (total token count, ties to the
// lower word id), drops all other entries and reindexes the vocabulary.
// keep_top >= vocab_size returns the corpus unchanged.
SparseCorpus truncate_vocab(const SparseCorpus& corpus, uint32_t keep_top);

// Per-document token-level split. Each document contributes
// floor(test_fraction * tokens) tokens to the test part, chosen by a seeded
// shuffle of its token list; a document with a single token stays entirely
// in the train part. Both parts keep the original document and vocabulary
// ids so they can be used side by side.
struct TrainTestSplit {
  SparseCorpus train;
  SparseCorpus test;
};

TrainTestSplit split_train_test(const SparseCorpus& corpus,
                                double test_fraction, uint64_t seed);

// Contiguous run of documents processed as one unit. Entries are the
// documents' rows, sorted by (doc, word).
struct MiniBatch {
  uint32_t index = 0;                 // 1-based batch number
  std::vector<uint32_t> doc_ids;      // ascending
  std::vector<CorpusEntry> entries;   // sorted by (doc, word)
  uint64_t num_tokens = 0;

  size_t nnz() const { return entries.size(); }
};

// Greedy fill in document-id order: a new batch starts when adding the next
// document would exceed target_nnz and the current batch is non-empty.
// Documents with no entries are skipped. A single document larger than
// target_nnz forms its own batch.
std::vector<MiniBatch> make_minibatches(const SparseCorpus& corpus,
                                        uint64_t target_nnz);

// One worker's slice of a mini-batch.
struct Shard {
  uint32_t worker_id = 0;             // 1-based
  std::vector<uint32_t> doc_ids;      // ascending
  std::vector<CorpusEntry> entries;   // sorted by (doc, word)
  uint64_t num_tokens = 0;
  size_t nnz() const { return entries.size(); }
};

// Balances documents over num_workers by per-document nnz: documents are
// ordered by descending nnz (ties to the lower doc id) and dealt out in a
// serpentine pass (1..N, N..1, ...), which keeps shard loads within one
// document of each other. Every worker id 1..N appears, possibly with an
// empty shard.
std::vector<Shard> shard_documents(const MiniBatch& batch,
                                   uint32_t num_workers);

}  // namespace pobp
