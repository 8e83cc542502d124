#include "pobp/pobp.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "corpus.h"
#include "driver.h"
#include "errors.h"

struct pobp_corpus {
  pobp::SparseCorpus data;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) return nullptr;
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

int to_status(pobp::ErrorClass c) {
  switch (c) {
    case pobp::ErrorClass::config:
      return POBP_ERR_CONFIG;
    case pobp::ErrorClass::io:
      return POBP_ERR_IO;
    case pobp::ErrorClass::numeric:
      return POBP_ERR_NUMERIC;
  }
  return POBP_ERR_INTERNAL;
}

template <typename F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return POBP_OK;
  } catch (const pobp::Error& e) {
    g_last_error = e.what();
    return to_status(e.error_class());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return POBP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return POBP_ERR_INTERNAL;
  }
}

int missing_argument(const char* name) {
  g_last_error = std::string(name) + " must not be NULL";
  return POBP_ERR_CONFIG;
}

pobp::RunSettings settings_from_optional(const char* config_json) {
  if (!config_json) return pobp::RunSettings{};
  return pobp::settings_from_json(config_json);
}

}  // namespace

extern "C" {

const char* pobp_last_error(void) { return g_last_error.c_str(); }

const char* pobp_version(void) { return "1.0.0"; }

void pobp_string_free(char* s) { std::free(s); }

char* pobp_default_config(void) {
  return dup_string(pobp::settings_to_json(pobp::RunSettings{}));
}

int pobp_config_merge(const char* base_json, const char* overlay_json,
                      char** merged_json_out) {
  if (!overlay_json) return missing_argument("overlay_json");
  if (!merged_json_out) return missing_argument("merged_json_out");
  return guarded([&] {
    pobp::RunSettings base;
    if (base_json) base = pobp::settings_from_json(base_json);
    const pobp::RunSettings merged =
        pobp::settings_from_json(overlay_json, base);
    *merged_json_out = dup_string(pobp::settings_to_json(merged));
  });
}

int pobp_corpus_load(const char* docword_path, const char* vocab_path,
                     pobp_corpus** corpus_out) {
  if (!docword_path) return missing_argument("docword_path");
  if (!vocab_path) return missing_argument("vocab_path");
  if (!corpus_out) return missing_argument("corpus_out");
  return guarded([&] {
    auto* c = new pobp_corpus{pobp::load_uci_bow(docword_path, vocab_path)};
    *corpus_out = c;
  });
}

int pobp_corpus_info_get(const pobp_corpus* corpus,
                         pobp_corpus_info* info_out) {
  if (!corpus) return missing_argument("corpus");
  if (!info_out) return missing_argument("info_out");
  info_out->documents = corpus->data.num_docs;
  info_out->vocabulary = corpus->data.vocab_size;
  info_out->nnz = corpus->data.entries.size();
  info_out->tokens = corpus->data.num_tokens;
  g_last_error.clear();
  return POBP_OK;
}

void pobp_corpus_free(pobp_corpus* corpus) { delete corpus; }

int pobp_train(const char* docword_path, const char* vocab_path,
               const char* out_dir, const char* config_json,
               char** report_json_out) {
  if (!docword_path) return missing_argument("docword_path");
  if (!vocab_path) return missing_argument("vocab_path");
  if (!out_dir) return missing_argument("out_dir");
  return guarded([&] {
    const auto settings = settings_from_optional(config_json);
    const auto outcome =
        pobp::train_run(docword_path, vocab_path, out_dir, settings);
    if (report_json_out) *report_json_out = dup_string(outcome.report_json);
  });
}

int pobp_evaluate(const char* model_path, const char* docword_path,
                  const char* vocab_path, const char* out_dir,
                  const char* config_json, double* perplexity_out,
                  char** report_json_out) {
  if (!model_path) return missing_argument("model_path");
  if (!docword_path) return missing_argument("docword_path");
  if (!vocab_path) return missing_argument("vocab_path");
  if (!out_dir) return missing_argument("out_dir");
  return guarded([&] {
    const auto settings = settings_from_optional(config_json);
    const auto outcome = pobp::evaluate_run(model_path, docword_path,
                                            vocab_path, out_dir, settings);
    if (perplexity_out) *perplexity_out = outcome.perplexity;
    if (report_json_out) *report_json_out = dup_string(outcome.report_json);
  });
}

int pobp_cost_model(const char* params_json, char** report_json_out) {
  if (!params_json) return missing_argument("params_json");
  if (!report_json_out) return missing_argument("report_json_out");
  return guarded([&] {
    const auto params = pobp::cost_params_from_json(params_json);
    *report_json_out = dup_string(pobp::cost_model_report_json(params));
  });
}

int pobp_diagnose(const char* request_json, char** report_json_out) {
  if (!request_json) return missing_argument("request_json");
  return guarded([&] {
    const auto request = pobp::diagnose_request_from_json(request_json);
    const auto outcome = pobp::diagnose_run(request);
    if (report_json_out) *report_json_out = dup_string(outcome.report_json);
  });
}

}  // extern "C"
