#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "matrix.h"

namespace pobp {

// Fractions of the vocabulary and of the topic set refreshed per iteration
// after the first full sweep.
struct SelectionRatios {
  double lambda_w = 1.0;
  double lambda_k = 1.0;

  void validate() const;
};

// The entries scheduled for the next iteration: the highest-residual words,
// each with its own highest-residual topics.
struct PowerSet {
  uint32_t iteration = 0;                         // the sweep it governs
  std::vector<uint32_t> words;                    // ascending
  std::vector<std::vector<uint32_t>> topics;      // aligned, each ascending

  size_t cell_count() const {
    size_t n = 0;
    for (const auto& t : topics) n += t.size();
    return n;
  }
};

// max(1, round-half-up(lambda * n)), capped at n.
size_t selection_count(double lambda, size_t n);

// Per-word residual mass: row sums of the residual matrix.
std::vector<double> word_residual_totals(const Matrix& residual);

// Indices of the selection_count(lambda_w, W) largest totals, ties broken
// toward the lower index, returned ascending. Uses partial selection, not a
// full sort.
std::vector<uint32_t> select_power_words(std::span<const double> totals,
                                         double lambda_w);

// For each listed word, the selection_count(lambda_k, K) topics with the
// largest residuals in that word's row, ties toward the lower index,
// ascending.
std::vector<std::vector<uint32_t>> select_power_topics(
    const Matrix& residual, std::span<const uint32_t> words, double lambda_k);

PowerSet select_power_set(const Matrix& residual, const SelectionRatios& ratios,
                          uint32_t iteration);

// Share of total residual mass held by the top round(f * W) words, for each
// requested fraction. Raises NumericError when the total is zero.
struct TopShare {
  double fraction;
  size_t words;
  double share;
};
std::vector<TopShare> powerlaw_topshare(std::span<const double> totals,
                                        std::span<const double> fractions);

// Full descending rank curve: (rank, word, residual).
struct RankPoint {
  size_t rank;      // 1-based
  uint32_t word;    // 0-based
  double residual;
};
std::vector<RankPoint> residual_rank_curve(std::span<const double> totals);

}  // namespace pobp
