#pragma once

#include <cmath>
#include <cstdint>

namespace qthru {

// Counter-based generator: output k is a stateless mix of (key, k), so streams
// can be split by deriving new keys and replays are exact across platforms.
// Mixing function is the splitmix64 finalizer applied twice.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t counter_hash(uint64_t key, uint64_t counter) {
    return mix64(mix64(key ^ 0x6a09e667f3bcc909ULL) + counter);
}

/// Stable derivation used for sweep replications: seed(base, n, rep).
inline uint64_t derive_seed(uint64_t base, uint64_t n, uint64_t rep) {
    return mix64(mix64(base ^ (0x243f6a8885a308d3ULL + n)) ^ (0x13198a2e03707344ULL + rep));
}

class CounterRng {
  public:
    explicit CounterRng(uint64_t key = 0) : key_(key) {}

    /// Child stream with an independent key; does not disturb this stream.
    CounterRng split(uint64_t stream_id) const {
        return CounterRng(mix64(key_ ^ (0xa4093822299f31d0ULL + stream_id)));
    }

    uint64_t next_u64() { return counter_hash(key_, counter_++); }

    /// Uniform in (0, 1]; never returns 0 so log() is safe.
    double next_u01() {
        // 53-bit mantissa
        uint64_t r = next_u64() >> 11;
        return (static_cast<double>(r) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

    double exponential(double rate) { return -std::log(next_u01()) / rate; }

    /// Integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    uint64_t key() const { return key_; }
    uint64_t counter() const { return counter_; }

  private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

}  // namespace qthru
