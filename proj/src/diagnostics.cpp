#include "diagnostics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.h"

namespace pobp {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&v](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && v[idx[j]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string f;
  std::istringstream is(line);
  while (std::getline(is, f, ',')) {
    if (!f.empty() && f.back() == '\r') f.pop_back();
    fields.push_back(f);
  }
  return fields;
}

size_t find_column(const std::vector<std::string>& header,
                   const std::string& name, const std::string& path) {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError(path + ": missing column '" + name + "'");
}

double parse_double(const std::string& s, const std::string& path,
                    size_t line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line_no) +
                     ": bad numeric field '" + s + "'");
  }
}

}  // namespace

double spearman_rank_correlation(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() != b.size())
    throw NumericError("rank correlation needs series of equal length");
  if (a.size() < 2)
    throw NumericError("rank correlation needs at least two points");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0)
    throw NumericError("rank correlation undefined for a constant series");
  return cov / std::sqrt(va * vb);
}

std::vector<TraceRow> read_trace_csv(const std::string& path,
                                     const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv_line(line);
  const size_t mi = find_column(header, "minibatch", path);
  const size_t ti = find_column(header, "iteration", path);
  const size_t vi = find_column(header, value_column, path);

  std::vector<TraceRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": wrong field count");
    TraceRow r;
    r.minibatch =
        static_cast<uint32_t>(parse_double(fields[mi], path, line_no));
    r.iteration =
        static_cast<uint32_t>(parse_double(fields[ti], path, line_no));
    r.value = parse_double(fields[vi], path, line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> read_word_residuals_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv_line(line);
  const size_t wi = find_column(header, "word", path);
  const size_t ri = find_column(header, "residual", path);

  std::vector<std::pair<uint32_t, double>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": wrong field count");
    const auto word =
        static_cast<uint32_t>(parse_double(fields[wi], path, line_no));
    if (word == 0)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": word ids are 1-based");
    rows.emplace_back(word - 1, parse_double(fields[ri], path, line_no));
  }
  uint32_t max_word = 0;
  for (const auto& [w, r] : rows) max_word = std::max(max_word, w);
  std::vector<double> totals(rows.empty() ? 0 : max_word + 1, 0.0);
  for (const auto& [w, r] : rows) totals[w] = r;
  return totals;
}

}  // namespace pobp
