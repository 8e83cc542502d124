#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pobp {

// Spearman rank correlation with average ranks for ties. Raises NumericError
// for length mismatches, fewer than two points, or a constant series.
double spearman_rank_correlation(std::span<const double> a,
                                 std::span<const double> b);

// One row of a per-iteration trace file.
struct TraceRow {
  uint32_t minibatch;
  uint32_t iteration;
  double value;
};

// Reads a CSV with a header line containing at least the columns
// "minibatch", "iteration" and value_column.
std::vector<TraceRow> read_trace_csv(const std::string& path,
                                     const std::string& value_column);

// Reads the per-word residual table written by training: columns
// "word,residual" with 1-based word ids, one row per vocabulary word.
std::vector<double> read_word_residuals_csv(const std::string& path);

}  // namespace pobp
