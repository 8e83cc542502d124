#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace pobp::log {

enum class Level { quiet = 0, error = 1, info = 2, debug = 3 };

// Verbosity is controlled by the POBP_LOG environment variable:
// quiet | error | info | debug. Default is info.
inline Level level() {
  static Level lv = [] {
    const char* e = std::getenv("POBP_LOG");
    if (!e) return Level::info;
    if (!std::strcmp(e, "quiet")) return Level::quiet;
    if (!std::strcmp(e, "error")) return Level::error;
    if (!std::strcmp(e, "debug")) return Level::debug;
    return Level::info;
  }();
  return lv;
}

inline void emit(Level lv, const char* tag, const char* fmt, va_list ap) {
  if (level() < lv) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
}

inline void info(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  emit(Level::info, "info", fmt, ap);
  va_end(ap);
}

inline void debug(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  emit(Level::debug, "debug", fmt, ap);
  va_end(ap);
}

inline void error(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  emit(Level::error, "error", fmt, ap);
  va_end(ap);
}

}  // namespace pobp::log
