#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace racov {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Mixes a seed with stream indices so parallel consumers get independent,
// reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return splitmix64(seed ^ splitmix64(a + 0x51ED2701u) ^
                    splitmix64(b + 0xA24BAED4u));
}

// mt19937_64 with self-owned draw helpers: std::uniform_int_distribution and
// std::shuffle are implementation-defined, these are not.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n); n must be > 0. Modulo bias is negligible for
  // the resample/shuffle sizes used here.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace racov
