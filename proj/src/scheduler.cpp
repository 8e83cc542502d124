#include "scheduler.h"

#include <algorithm>
#include <cmath>

#include "errors.h"

namespace pobp {

void SelectionRatios::validate() const {
  if (!(lambda_w > 0.0 && lambda_w <= 1.0))
    throw ConfigError("lambda_w must be in (0, 1]");
  if (!(lambda_k > 0.0 && lambda_k <= 1.0))
    throw ConfigError("lambda_k must be in (0, 1]");
}

size_t selection_count(double lambda, size_t n) {
  auto c = static_cast<size_t>(std::floor(lambda * static_cast<double>(n) + 0.5));
  if (c < 1) c = 1;
  if (c > n) c = n;
  return c;
}

std::vector<double> word_residual_totals(const Matrix& residual) {
  std::vector<double> totals(residual.rows(), 0.0);
  for (size_t w = 0; w < residual.rows(); ++w) {
    auto row = residual.row(w);
    double s = 0.0;
    for (double v : row) s += v;
    totals[w] = s;
  }
  return totals;
}

namespace {

// Top-`count` indices by value, ties toward the lower index, ascending order
// out. nth_element keeps this O(n) instead of a full sort.
std::vector<uint32_t> top_indices(std::span<const double> values, size_t count) {
  std::vector<uint32_t> idx(values.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
  auto better = [&values](uint32_t a, uint32_t b) {
    return values[a] != values[b] ? values[a] > values[b] : a < b;
  };
  if (count < idx.size())
    std::nth_element(idx.begin(), idx.begin() + count - 1, idx.end(), better);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<uint32_t> select_power_words(std::span<const double> totals,
                                         double lambda_w) {
  if (totals.empty()) throw ConfigError("empty residual totals");
  return top_indices(totals, selection_count(lambda_w, totals.size()));
}

std::vector<std::vector<uint32_t>> select_power_topics(
    const Matrix& residual, std::span<const uint32_t> words, double lambda_k) {
  const size_t count = selection_count(lambda_k, residual.cols());
  std::vector<std::vector<uint32_t>> out;
  out.reserve(words.size());
  for (uint32_t w : words) out.push_back(top_indices(residual.row(w), count));
  return out;
}

PowerSet select_power_set(const Matrix& residual, const SelectionRatios& ratios,
                          uint32_t iteration) {
  ratios.validate();
  PowerSet ps;
  ps.iteration = iteration;
  const auto totals = word_residual_totals(residual);
  ps.words = select_power_words(totals, ratios.lambda_w);
  ps.topics = select_power_topics(residual, ps.words, ratios.lambda_k);
  return ps;
}

std::vector<TopShare> powerlaw_topshare(std::span<const double> totals,
                                        std::span<const double> fractions) {
  double total = 0.0;
  for (double v : totals) total += v;
  if (!(total > 0.0))
    throw NumericError("residual mass is zero; nothing left to rank");

  std::vector<double> sorted(totals.begin(), totals.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  std::vector<double> cumulative(sorted.size());
  double acc = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    acc += sorted[i];
    cumulative[i] = acc;
  }

  std::vector<TopShare> out;
  out.reserve(fractions.size());
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("top-share fraction must be in (0, 1]");
    const size_t n = selection_count(f, sorted.size());
    out.push_back({f, n, cumulative[n - 1] / total});
  }
  return out;
}

std::vector<RankPoint> residual_rank_curve(std::span<const double> totals) {
  std::vector<uint32_t> idx(totals.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
  std::sort(idx.begin(), idx.end(), [&totals](uint32_t a, uint32_t b) {
    return totals[a] != totals[b] ? totals[a] > totals[b] : a < b;
  });
  std::vector<RankPoint> curve(idx.size());
  for (size_t i = 0; i < idx.size(); ++i)
    curve[i] = {i + 1, idx[i], totals[idx[i]]};
  return curve;
}

}  // namespace pobp
