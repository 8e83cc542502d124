#include "corpus.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.h"
#include "rng.h"

namespace pobp {

namespace {

std::string line_msg(const std::string& path, size_t line_no,
                     const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  return os.str();
}

// Splits a line into whitespace-separated unsigned fields. Returns false on
// any non-numeric garbage.
bool parse_unsigned_fields(const std::string& line, uint64_t* out,
                           size_t want) {
  const char* p = line.data();
  const char* end = p + line.size();
  for (size_t i = 0; i < want; ++i) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p >= end) return false;
    auto [next, ec] = std::from_chars(p, end, out[i]);
    if (ec != std::errc()) return false;
    p = next;
  }
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p == end;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

void sort_and_merge(std::vector<CorpusEntry>& entries,
                    const std::string& path) {
  std::sort(entries.begin(), entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) {
              return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
            });
  size_t out = 0;
  for (size_t i = 0; i < entries.size();) {
    CorpusEntry e = entries[i];
    uint64_t total = e.count;
    size_t j = i + 1;
    while (j < entries.size() && entries[j].doc == e.doc &&
           entries[j].word == e.word) {
      total += entries[j].count;
      ++j;
    }
    if (total > std::numeric_limits<uint32_t>::max())
      throw ParseError(path + ": summed count overflows for doc " +
                       std::to_string(e.doc + 1) + " word " +
                       std::to_string(e.word + 1));
    e.count = static_cast<uint32_t>(total);
    entries[out++] = e;
    i = j;
  }
  entries.resize(out);
}

}  // namespace

SparseCorpus load_uci_bow(const std::string& docword_path,
                          const std::string& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw IoError("cannot open " + docword_path);

  SparseCorpus corpus;
  std::string line;
  size_t line_no = 0;
  uint64_t header[3];
  for (int h = 0; h < 3; ++h) {
    if (!std::getline(in, line))
      throw ParseError(line_msg(docword_path, line_no + 1,
                                "expected header line (found end of file)"));
    ++line_no;
    uint64_t v;
    if (!parse_unsigned_fields(line, &v, 1))
      throw ParseError(
          line_msg(docword_path, line_no, "expected one unsigned header value"));
    header[h] = v;
  }
  const uint64_t num_docs = header[0];
  const uint64_t vocab_size = header[1];
  const uint64_t declared_nnz = header[2];
  if (num_docs == 0 || vocab_size == 0)
    throw ParseError(docword_path + ": document or vocabulary count is zero");
  if (num_docs > std::numeric_limits<uint32_t>::max() ||
      vocab_size > std::numeric_limits<uint32_t>::max())
    throw ParseError(docword_path + ": dimension exceeds 32-bit range");

  corpus.num_docs = static_cast<uint32_t>(num_docs);
  corpus.vocab_size = static_cast<uint32_t>(vocab_size);
  corpus.entries.reserve(declared_nnz);

  uint64_t seen = 0;
  while (seen < declared_nnz) {
    if (!std::getline(in, line))
      throw ParseError(line_msg(
          docword_path, line_no + 1,
          "declared " + std::to_string(declared_nnz) +
              " entries but file ends after " + std::to_string(seen)));
    ++line_no;
    if (blank(line))
      throw ParseError(line_msg(docword_path, line_no, "blank body line"));
    uint64_t f[3];
    if (!parse_unsigned_fields(line, f, 3))
      throw ParseError(
          line_msg(docword_path, line_no, "expected 'doc word count'"));
    if (f[0] < 1 || f[0] > num_docs)
      throw ParseError(line_msg(docword_path, line_no,
                                "doc id " + std::to_string(f[0]) +
                                    " out of range 1.." +
                                    std::to_string(num_docs)));
    if (f[1] < 1 || f[1] > vocab_size)
      throw ParseError(line_msg(docword_path, line_no,
                                "word id " + std::to_string(f[1]) +
                                    " out of range 1.." +
                                    std::to_string(vocab_size)));
    if (f[2] < 1)
      throw ParseError(line_msg(docword_path, line_no, "count must be >= 1"));
    if (f[2] > std::numeric_limits<uint32_t>::max())
      throw ParseError(line_msg(docword_path, line_no, "count out of range"));
    corpus.entries.push_back({static_cast<uint32_t>(f[0] - 1),
                              static_cast<uint32_t>(f[1] - 1),
                              static_cast<uint32_t>(f[2])});
    ++seen;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line))
      throw ParseError(
          line_msg(docword_path, line_no, "expected end of file"));
  }

  sort_and_merge(corpus.entries, docword_path);
  corpus.num_tokens = 0;
  for (const auto& e : corpus.entries) corpus.num_tokens += e.count;

  std::ifstream vin(vocab_path);
  if (!vin) throw IoError("cannot open " + vocab_path);
  while (std::getline(vin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    corpus.vocab.push_back(line);
  }
  if (corpus.vocab.size() != corpus.vocab_size)
    throw ParseError(vocab_path + ": expected " +
                     std::to_string(corpus.vocab_size) + " words, found " +
                     std::to_string(corpus.vocab.size()));
  return corpus;
}

void save_uci_bow(const SparseCorpus& corpus, const std::string& docword_path,
                  const std::string& vocab_path) {
  std::ofstream out(docword_path);
  if (!out) throw IoError("cannot write " + docword_path);
  out << corpus.num_docs << "\n"
      << corpus.vocab_size << "\n"
      << corpus.entries.size() << "\n";
  for (const auto& e : corpus.entries)
    out << e.doc + 1 << " " << e.word + 1 << " " << e.count << "\n";
  if (!out) throw IoError("write failed: " + docword_path);

  std::ofstream vout(vocab_path);
  if (!vout) throw IoError("cannot write " + vocab_path);
  for (const auto& w : corpus.vocab) vout << w << "\n";
  if (!vout) throw IoError("write failed: " + vocab_path);
}

SparseCorpus truncate_vocab(const SparseCorpus& corpus, uint32_t keep_top) {
  if (keep_top == 0) throw ConfigError("truncate_vocab: keep_top must be >= 1");
  if (keep_top >= corpus.vocab_size) return corpus;

  std::vector<uint64_t> freq(corpus.vocab_size, 0);
  for (const auto& e : corpus.entries) freq[e.word] += e.count;

  std::vector<uint32_t> order(corpus.vocab_size);
  for (uint32_t w = 0; w < corpus.vocab_size; ++w) order[w] = w;
  std::nth_element(order.begin(), order.begin() + keep_top - 1, order.end(),
                   [&](uint32_t a, uint32_t b) {
                     return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
                   });
  std::vector<uint32_t> kept(order.begin(), order.begin() + keep_top);
  std::sort(kept.begin(), kept.end());  // preserve original word order

  constexpr uint32_t kDropped = std::numeric_limits<uint32_t>::max();
  std::vector<uint32_t> remap(corpus.vocab_size, kDropped);
  SparseCorpus out;
  out.num_docs = corpus.num_docs;
  out.vocab_size = keep_top;
  out.vocab.reserve(keep_top);
  for (uint32_t i = 0; i < keep_top; ++i) {
    remap[kept[i]] = i;
    out.vocab.push_back(corpus.vocab.empty() ? std::string()
                                             : corpus.vocab[kept[i]]);
  }
  for (const auto& e : corpus.entries) {
    uint32_t nw = remap[e.word];
    if (nw == kDropped) continue;
    out.entries.push_back({e.doc, nw, e.count});
    out.num_tokens += e.count;
  }
  return out;
}

TrainTestSplit split_train_test(const SparseCorpus& corpus,
                                double test_fraction, uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in [0, 1)");

  TrainTestSplit split;
  for (SparseCorpus* part : {&split.train, &split.test}) {
    part->num_docs = corpus.num_docs;
    part->vocab_size = corpus.vocab_size;
    part->vocab = corpus.vocab;
  }

  std::vector<uint32_t> tokens;  // word id per token of the current doc
  size_t i = 0;
  while (i < corpus.entries.size()) {
    const uint32_t doc = corpus.entries[i].doc;
    size_t j = i;
    uint64_t doc_tokens = 0;
    while (j < corpus.entries.size() && corpus.entries[j].doc == doc) {
      doc_tokens += corpus.entries[j].count;
      ++j;
    }
    const auto n_test =
        static_cast<uint64_t>(test_fraction * static_cast<double>(doc_tokens));
    if (n_test == 0) {
      for (size_t k = i; k < j; ++k) split.train.entries.push_back(corpus.entries[k]);
      split.train.num_tokens += doc_tokens;
      i = j;
      continue;
    }

    tokens.clear();
    tokens.reserve(doc_tokens);
    for (size_t k = i; k < j; ++k)
      for (uint32_t c = 0; c < corpus.entries[k].count; ++c)
        tokens.push_back(corpus.entries[k].word);

    KeyedRng rng(seed, rng_stream::train_test_split, doc, 0);
    for (size_t t = tokens.size(); t > 1; --t)
      std::swap(tokens[t - 1], tokens[rng.below(t)]);

    // First n_test shuffled tokens go to the test part.
    std::vector<std::pair<uint32_t, uint32_t>> counts;  // (word, count)
    auto tally = [&counts](std::vector<uint32_t>::const_iterator b,
                           std::vector<uint32_t>::const_iterator e) {
      std::vector<uint32_t> ws(b, e);
      std::sort(ws.begin(), ws.end());
      counts.clear();
      for (size_t k = 0; k < ws.size();) {
        size_t r = k;
        while (r < ws.size() && ws[r] == ws[k]) ++r;
        counts.emplace_back(ws[k], static_cast<uint32_t>(r - k));
        k = r;
      }
    };

    tally(tokens.begin(), tokens.begin() + n_test);
    for (auto [w, c] : counts) {
      split.test.entries.push_back({doc, w, c});
      split.test.num_tokens += c;
    }
    tally(tokens.begin() + n_test, tokens.end());
    for (auto [w, c] : counts) {
      split.train.entries.push_back({doc, w, c});
      split.train.num_tokens += c;
    }
    i = j;
  }
  return split;
}

std::vector<MiniBatch> make_minibatches(const SparseCorpus& corpus,
                                        uint64_t target_nnz) {
  if (target_nnz == 0) throw ConfigError("minibatch target nnz must be >= 1");

  std::vector<MiniBatch> batches;
  MiniBatch current;
  current.index = 1;

  size_t i = 0;
  while (i < corpus.entries.size()) {
    const uint32_t doc = corpus.entries[i].doc;
    size_t j = i;
    uint64_t doc_tokens = 0;
    while (j < corpus.entries.size() && corpus.entries[j].doc == doc) {
      doc_tokens += corpus.entries[j].count;
      ++j;
    }
    const size_t doc_nnz = j - i;
    if (!current.doc_ids.empty() &&
        current.entries.size() + doc_nnz > target_nnz) {
      batches.push_back(std::move(current));
      current = MiniBatch{};
      current.index = static_cast<uint32_t>(batches.size() + 1);
    }
    current.doc_ids.push_back(doc);
    current.entries.insert(current.entries.end(), corpus.entries.begin() + i,
                           corpus.entries.begin() + j);
    current.num_tokens += doc_tokens;
    i = j;
  }
  if (!current.doc_ids.empty()) batches.push_back(std::move(current));
  return batches;
}

std::vector<Shard> shard_documents(const MiniBatch& batch,
                                   uint32_t num_workers) {
  if (num_workers == 0) throw ConfigError("num_workers must be >= 1");

  struct DocLoad {
    uint32_t doc;
    uint32_t nnz;
  };
  std::vector<DocLoad> loads;
  loads.reserve(batch.doc_ids.size());
  size_t i = 0;
  while (i < batch.entries.size()) {
    const uint32_t doc = batch.entries[i].doc;
    size_t j = i;
    while (j < batch.entries.size() && batch.entries[j].doc == doc) ++j;
    loads.push_back({doc, static_cast<uint32_t>(j - i)});
    i = j;
  }
  std::sort(loads.begin(), loads.end(), [](const DocLoad& a, const DocLoad& b) {
    return a.nnz != b.nnz ? a.nnz > b.nnz : a.doc < b.doc;
  });

  // Serpentine deal over descending loads: 1..N, then N..1, and so on.
  std::vector<uint32_t> owner_of_doc;  // parallel to loads
  owner_of_doc.reserve(loads.size());
  for (size_t r = 0; r < loads.size(); ++r) {
    const size_t pos = r % (2ull * num_workers);
    const uint32_t worker = pos < num_workers
                                ? static_cast<uint32_t>(pos)
                                : static_cast<uint32_t>(2ull * num_workers - 1 - pos);
    owner_of_doc.push_back(worker);
  }

  std::vector<Shard> shards(num_workers);
  for (uint32_t n = 0; n < num_workers; ++n) shards[n].worker_id = n + 1;

  // doc id -> worker, then one ordered pass over the batch entries so each
  // shard keeps (doc, word) order.
  std::vector<std::pair<uint32_t, uint32_t>> doc_worker;
  doc_worker.reserve(loads.size());
  for (size_t r = 0; r < loads.size(); ++r)
    doc_worker.emplace_back(loads[r].doc, owner_of_doc[r]);
  std::sort(doc_worker.begin(), doc_worker.end());

  auto worker_of = [&doc_worker](uint32_t doc) {
    auto it = std::lower_bound(
        doc_worker.begin(), doc_worker.end(), std::make_pair(doc, 0u),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    return it->second;
  };

  for (const auto& [doc, worker] : doc_worker)
    shards[worker].doc_ids.push_back(doc);
  for (const auto& e : batch.entries) {
    Shard& s = shards[worker_of(e.doc)];
    s.entries.push_back(e);
    s.num_tokens += e.count;
  }
  return shards;
}

}  // namespace pobp
