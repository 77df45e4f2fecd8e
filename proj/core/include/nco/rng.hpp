#pragma once

#include <cstdint>

namespace nco {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based deterministic RNG (SplitMix64 stream). Every consumer derives
// its own stream from (seed, step, index, purpose), so runs are reproducible
// regardless of thread scheduling and resumable from a (seed, step) pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (a + 0x632BE59BD9B4E019ull));
    s = splitmix64(s ^ (b + 0x9E6C63D0876A9F4Bull));
    s = splitmix64(s ^ (c + 0xC2B2AE3D27D4EB4Full));
    Rng r(0);
    r.state_ = s;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_double() * static_cast<double>(hi - lo + 1));
  }

  // Uniform in [-range, range).
  double next_symmetric(double range) { return (next_double() * 2.0 - 1.0) * range; }

 private:
  std::uint64_t state_;
};

// Purpose tags for derived streams; keeps seeds from colliding across uses.
enum class RngStream : std::uint64_t {
  kInstance = 1,
  kRollout = 2,
  kInit = 3,
  kEval = 4,
  kEas = 5,
};

inline Rng stream_for(std::uint64_t seed, RngStream purpose, std::uint64_t step = 0,
                      std::uint64_t index = 0) {
  return Rng::stream(seed, static_cast<std::uint64_t>(purpose), step, index);
}

}  // namespace nco
