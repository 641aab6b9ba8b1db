#ifndef MIXSEL_RNG_HPP
#define MIXSEL_RNG_HPP

#include <cstdint>
#include <cmath>
#include <random>

namespace mixsel {

// 64-bit finalizer from splitmix64; bijective, good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from (base, stream). All randomness in
// the library flows from one base seed through this function, so runs are
// reproducible and sub-streams (restarts, replicates) do not overlap.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return split_seed(split_seed(base, a), b);
}

// Deterministic RNG wrapper. Draw functions are implemented explicitly
// (not via std::*_distribution) so that sequences are identical for a
// given seed independent of the standard library in use.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no cached spare; state is just the engine).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Index in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
};

}  // namespace mixsel

#endif
