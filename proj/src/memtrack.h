#pragma once

#include <atomic>
#include <cstddef>

namespace pobp::memtrack {

// Process-wide gauge of live per-batch state (messages plus per-document
// topic sums). The streaming contract is that this gauge never rises above
// one mini-batch's requirement no matter how many batches a run consumes;
// tests assert against it instead of OS-level RSS.
void add(size_t bytes);
void sub(size_t bytes);
size_t current() noexcept;
size_t peak() noexcept;
void reset_peak() noexcept;

// RAII registration. Movable so tracked containers can be returned by value.
class TrackedBytes {
public:
  TrackedBytes() = default;
  explicit TrackedBytes(size_t n) : n_(n) { add(n_); }
  TrackedBytes(const TrackedBytes&) = delete;
  TrackedBytes& operator=(const TrackedBytes&) = delete;
  TrackedBytes(TrackedBytes&& o) noexcept : n_(o.n_) { o.n_ = 0; }
  TrackedBytes& operator=(TrackedBytes&& o) noexcept {
    if (this != &o) {
      if (n_) sub(n_);
      n_ = o.n_;
      o.n_ = 0;
    }
    return *this;
  }
  ~TrackedBytes() {
    if (n_) sub(n_);
  }
  size_t size() const { return n_; }

private:
  size_t n_ = 0;
};

}  // namespace pobp::memtrack
