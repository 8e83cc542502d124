#include "memtrack.h"

namespace pobp::memtrack {

namespace {
std::atomic<size_t> g_current{0};
std::atomic<size_t> g_peak{0};
}  // namespace

void add(size_t bytes) {
  size_t now = g_current.fetch_add(bytes) + bytes;
  size_t prev = g_peak.load();
  while (now > prev && !g_peak.compare_exchange_weak(prev, now)) {
  }
}

void sub(size_t bytes) { g_current.fetch_sub(bytes); }

size_t current() noexcept { return g_current.load(); }

size_t peak() noexcept { return g_peak.load(); }

void reset_peak() noexcept { g_peak.store(g_current.load()); }

}  // namespace pobp::memtrack
