#pragma once

#include <cstdint>

namespace pobp {

// Analytic scaling model. A is the total computation cost of a training run
// (divided across N processors), B the per-processor communication cost per
// unit of parallelism; overall(N) = A/N + B*N is minimized at
// N* = sqrt(A/B) with value 2*sqrt(A*B).
struct CostParams {
  // Direct costs; when comp_cost <= 0 they are derived from the raw
  // quantities below.
  double comp_cost = 0.0;  // A
  double comm_cost = 0.0;  // B

  double topics = 0.0;       // K
  double vocab = 0.0;        // W
  double docs = 0.0;         // D
  double minibatches = 0.0;  // M
  double iters = 0.0;        // sweeps per mini-batch (online schemes)
  double batch_iters = 0.0;  // sweeps of a batch sampler over the corpus
  double workers = 0.0;      // N
  double lambda_w = 1.0;
  double lambda_k = 1.0;
  double doc_density = 1.0;        // average fraction of the vocabulary per doc
  double batch_doc_density = 1.0;  // same, for the batch sampler's state
  double bytes_per_entry = 8.0;    // two single-precision matrices per cell
};

struct AlgorithmCost {
  double computation = 0.0;
  double memory = 0.0;
  double communication = 0.0;  // wire entries; multiply by bytes_per_entry
};

struct CostReport {
  double comp_cost = 0.0;  // A actually used
  double comm_cost = 0.0;  // B actually used
  double optimal_workers = 0.0;
  double min_overall_cost = 0.0;

  AlgorithmCost distributed;   // residual-scheduled online BP across N workers
  AlgorithmCost single_node;   // the same scheme on one machine (no sync)
  AlgorithmCost batch_sampler; // distributed batch Gibbs baseline

  // Total synchronization traffic projections in bytes.
  double full_exchange_bytes = 0.0;  // N*M*T*K*W * bytes_per_entry
  double power_exchange_bytes = 0.0; // lambda_k*lambda_w scaled
  double batch_sampler_bytes = 0.0;  // N*T'*K*W * bytes_per_entry
};

CostReport cost_model(const CostParams& p);

}  // namespace pobp
