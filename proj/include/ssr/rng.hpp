#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace ssr::rng {

// splitmix64 finalizer. All randomness in the project flows through this so
// datasets, weight inits and shuffles are bit-reproducible across platforms.
inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe as a log argument
  double u01_open() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Box-Muller; one fresh draw per call, no cached spare (keeps streams
  // position-independent of call parity).
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = u01_open();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) { return next() % n; }

 private:
  uint64_t state_;
};

inline uint64_t hash_str(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent substream from a root seed and a list of tags.
// Used to key weight-init streams by structural coordinates so identical
// candidates get identical weights regardless of which space they sit in.
inline uint64_t substream(uint64_t seed, std::string_view tag,
                          std::initializer_list<int64_t> coords = {}) {
  uint64_t h = mix64(seed ^ hash_str(tag));
  for (int64_t c : coords) h = mix64(h ^ static_cast<uint64_t>(c));
  return h;
}

}  // namespace ssr::rng
