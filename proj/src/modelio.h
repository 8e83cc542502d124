#pragma once

#include <string>

#include "matrix.h"

namespace pobp {

// Model file: little-endian u32 topic count, u32 vocabulary size, then
// topics * vocab 8-byte reals in topic-major (row-major K x W) order. The
// in-memory matrix is word-major, so saving/loading transposes.
void save_model(const std::string& path, const Matrix& word_topic);
Matrix load_model(const std::string& path);

}  // namespace pobp
