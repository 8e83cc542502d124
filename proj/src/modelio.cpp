#include "modelio.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "errors.h"

namespace pobp {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double v) {
  uint64_t u = std::bit_cast<uint64_t>(v);
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t get_u32(std::ifstream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

double get_f64(std::ifstream& in) {
  uint8_t b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = (u << 8) | b[i];
  return std::bit_cast<double>(u);
}

}  // namespace

void save_model(const std::string& path, const Matrix& word_topic) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const auto topics = static_cast<uint32_t>(word_topic.cols());
  const auto vocab = static_cast<uint32_t>(word_topic.rows());
  put_u32(out, topics);
  put_u32(out, vocab);
  for (uint32_t k = 0; k < topics; ++k)
    for (uint32_t w = 0; w < vocab; ++w) put_f64(out, word_topic(w, k));
  if (!out) throw IoError("write failed: " + path);
}

Matrix load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const uint32_t topics = get_u32(in);
  const uint32_t vocab = get_u32(in);
  if (!in || topics == 0 || vocab == 0)
    throw ParseError(path + ": bad model header");
  Matrix word_topic(vocab, topics);
  for (uint32_t k = 0; k < topics; ++k)
    for (uint32_t w = 0; w < vocab; ++w) {
      word_topic(w, k) = get_f64(in);
      if (!in) throw ParseError(path + ": model file truncated");
    }
  char extra;
  if (in.read(&extra, 1))
    throw ParseError(path + ": trailing bytes after model data");
  return word_topic;
}

}  // namespace pobp
