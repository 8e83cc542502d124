/* Public C interface to the streaming topic-model engine.
 *
 * Conventions:
 *   - Functions returning int give POBP_OK (0) on success or an error code;
 *     pobp_last_error() then describes the failure (thread-local storage).
 *   - Strings produced by the library (reports, configs) are heap-allocated;
 *     release them with pobp_string_free.
 *   - Configuration travels as JSON text with kebab-case keys; pass NULL
 *     wherever a config is optional to get the built-in defaults. Unknown
 *     keys are rejected.
 */
#ifndef POBP_H
#define POBP_H

#include <stdint.h>

#if defined(_WIN32)
#define POBP_API __declspec(dllexport)
#else
#define POBP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum pobp_status {
  POBP_OK = 0,
  POBP_ERR_CONFIG = 1,   /* invalid configuration or arguments */
  POBP_ERR_IO = 2,       /* missing/unreadable/unwritable or malformed files */
  POBP_ERR_NUMERIC = 3,  /* numerical, accounting, or protocol failure */
  POBP_ERR_INTERNAL = 4  /* unexpected failure; report a bug */
};

/* Message for the most recent failing call on this thread. Valid until the
 * next library call on the same thread. Never NULL. */
POBP_API const char* pobp_last_error(void);

POBP_API const char* pobp_version(void);

POBP_API void pobp_string_free(char* s);

/* ---- configuration ----------------------------------------------------- */

/* JSON text of the built-in default configuration. */
POBP_API char* pobp_default_config(void);

/* Overlays `overlay_json` onto `base_json` (NULL = defaults) and returns the
 * complete merged config. Later values win, so chaining calls implements
 * "command line beats file beats defaults". */
POBP_API int pobp_config_merge(const char* base_json, const char* overlay_json,
                               char** merged_json_out);

/* ---- corpus handles ----------------------------------------------------- */

typedef struct pobp_corpus pobp_corpus;

typedef struct pobp_corpus_info {
  uint32_t documents;
  uint32_t vocabulary;
  uint64_t nnz;    /* distinct (document, word) pairs */
  uint64_t tokens; /* sum of counts */
} pobp_corpus_info;

/* Loads a bag-of-words corpus: a header of three counts (documents, vocabulary
 * size, number of entries) followed by one "doc word count" line per entry,
 * plus a vocabulary file with one word per line. */
POBP_API int pobp_corpus_load(const char* docword_path, const char* vocab_path,
                              pobp_corpus** corpus_out);

POBP_API int pobp_corpus_info_get(const pobp_corpus* corpus,
                                  pobp_corpus_info* info_out);

POBP_API void pobp_corpus_free(pobp_corpus* corpus);

/* ---- commands ----------------------------------------------------------- */

/* Trains on the corpus and writes all artifacts (model, ledger, traces,
 * report) under out_dir. When report_json_out is non-NULL it receives the
 * report text that was written to out_dir/report.json. */
POBP_API int pobp_train(const char* docword_path, const char* vocab_path,
                        const char* out_dir, const char* config_json,
                        char** report_json_out);

/* Scores a saved model on a fresh split of the corpus; writes
 * out_dir/eval_report.json. perplexity_out may be NULL. */
POBP_API int pobp_evaluate(const char* model_path, const char* docword_path,
                           const char* vocab_path, const char* out_dir,
                           const char* config_json, double* perplexity_out,
                           char** report_json_out);

/* Evaluates the analytic cost model. params_json holds kebab-case fields
 * (topics, vocab, docs, minibatches, iters, batch-iters, workers, lambda-w,
 * lambda-k, doc-density, batch-doc-density, bytes-per-entry, or comp-cost +
 * comm-cost directly); the report is returned as JSON text. */
POBP_API int pobp_cost_model(const char* params_json, char** report_json_out);

/* Power-law diagnosis of a residual snapshot, optionally correlating a
 * residual trace against a perplexity trace. request_json keys:
 * word-residuals, residual-trace, perplexity-trace, out-dir, fractions,
 * minibatch. */
POBP_API int pobp_diagnose(const char* request_json, char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* POBP_H */
