#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lan {

// Deterministic random source. All randomness in the library flows through
// this class so that a (seed, stream name) pair fully reproduces a run.
// Distribution sampling is implemented by hand because the std::
// distributions are not bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be >= 1.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Standard normal via Box-Muller; keeps the spare draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Derives a child seed from (seed, stream name[, index]). FNV-1a over the
  // name followed by a splitmix64 finalizer; streams with different names or
  // indices are effectively independent.
  static std::uint64_t derive(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull;
    h ^= index * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull;
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
  }

  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    return Rng(derive(seed, name, index));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lan
