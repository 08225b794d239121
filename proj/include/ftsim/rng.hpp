#pragma once

#include <cstdint>
#include <random>

namespace ftsim {

// SplitMix64 finalizer; used to derive independent stream seeds from the
// single master seed so replications never share state.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(master ^ mix64(a + 1)) ^ mix64(b + 0x9E3779B97F4A7C15ull));
}

// Seeded stream with portable uniform draws (raw 64-bit output scaled by
// hand, no std::uniform_* distributions, so sequences depend only on the
// standard-specified mt19937_64 output).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); modulo bias is irrelevant at simulation scales (n << 2^64)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ftsim
