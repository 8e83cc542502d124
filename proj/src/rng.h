#pragma once

#include <cstdint>

namespace pobp {

// splitmix64: tiny, fast, well mixed. Used for every random draw in the
// engine so results never depend on platform library internals.
inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic stream keyed by (seed, stream, a, b). Keying draws by their
// logical coordinates (document, word) rather than by call order keeps every
// draw independent of how work is sharded across workers.
class KeyedRng {
public:
  KeyedRng(uint64_t seed, uint64_t stream, uint64_t a, uint64_t b) {
    uint64_t s = seed;
    state_ = splitmix64_next(s) ^ (stream * 0x9e3779b97f4a7c15ull);
    state_ ^= splitmix64_next(s) + a * 0xbf58476d1ce4e5b9ull;
    state_ ^= splitmix64_next(s) + b * 0x94d049bb133111ebull;
    // One warm-up step so nearby keys decorrelate.
    (void)splitmix64_next(state_);
  }

  uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in (0, 1]; never returns 0 so normalizing a vector of draws
  // always succeeds.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Modulo bias is negligible for the shuffle
  // sizes involved (n far below 2^32).
  uint64_t below(uint64_t n) { return next_u64() % n; }

private:
  uint64_t state_;
};

// Stream tags so different uses of the same (seed, doc, word) key do not
// collide.
namespace rng_stream {
constexpr uint64_t message_init = 0x4d494e49;
constexpr uint64_t train_test_split = 0x53504c54;
constexpr uint64_t fold_in = 0x464f4c44;
constexpr uint64_t corpus_synth = 0x53594e54;
}  // namespace rng_stream

}  // namespace pobp
