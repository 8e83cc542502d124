#include "costmodel.h"

#include <cmath>

#include "errors.h"

namespace pobp {

CostReport cost_model(const CostParams& p) {
  CostReport r;

  const double K = p.topics, W = p.vocab, D = p.docs, M = p.minibatches;
  const double T = p.iters, Tb = p.batch_iters, N = p.workers;
  const double lw = p.lambda_w, lk = p.lambda_k;
  const double eta = p.doc_density, etab = p.batch_doc_density;

  if (p.comp_cost > 0.0 || p.comm_cost > 0.0) {
    if (!(p.comp_cost > 0.0 && p.comm_cost > 0.0))
      throw ConfigError("give both comp_cost and comm_cost or neither");
    r.comp_cost = p.comp_cost;
    r.comm_cost = p.comm_cost;
  } else {
    if (!(K > 0 && W > 0 && D > 0 && M > 0 && T > 0))
      throw ConfigError("cost model needs positive K, W, D, M, T");
    if (!(lw > 0 && lw <= 1 && lk > 0 && lk <= 1))
      throw ConfigError("lambda fractions must be in (0, 1]");
    if (!(eta > 0 && eta <= 1))
      throw ConfigError("doc_density must be in (0, 1]");
    // Total computation across the run; per-processor communication per
    // unit of parallelism (the N in the communication row divided out).
    r.comp_cost = eta * lk * lw * K * W * D * T;
    r.comm_cost = lk * lw * K * W * M * T;
  }
  r.optimal_workers = std::sqrt(r.comp_cost / r.comm_cost);
  r.min_overall_cost = 2.0 * std::sqrt(r.comp_cost * r.comm_cost);

  if (K > 0 && W > 0 && D > 0 && M > 0 && T > 0 && N > 0) {
    r.distributed.computation = eta * lk * lw * K * W * D * T / N;
    r.distributed.memory = K * (eta * W * D + D) / (M * N) + 2.0 * K * W;
    r.distributed.communication = lk * lw * K * W * M * N * T;

    r.single_node.computation = eta * lk * lw * K * W * D * T;
    r.single_node.memory = K * (eta * W * D + D) / M + 2.0 * K * W;
    r.single_node.communication = 0.0;

    r.full_exchange_bytes = N * M * T * K * W * p.bytes_per_entry;
    r.power_exchange_bytes = lk * lw * r.full_exchange_bytes;
  }
  if (K > 0 && W > 0 && D > 0 && N > 0 && Tb > 0) {
    r.batch_sampler.computation = etab * K * W * D * Tb / N;
    r.batch_sampler.memory = (K * D + etab * W * D) / N + K * W;
    r.batch_sampler.communication = N * K * W * Tb;
    r.batch_sampler_bytes = N * Tb * K * W * p.bytes_per_entry;
  }
  return r;
}

}  // namespace pobp
