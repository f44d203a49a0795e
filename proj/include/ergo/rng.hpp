#pragma once

// Seeded randomness with stable output across standard libraries: raw
// mt19937_64 draws mapped to doubles by hand instead of std distributions,
// whose value sequences are implementation-defined.

#include <complex>
#include <cstdint>
#include <random>

namespace ergo {

inline double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double rand_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * rand_unit(rng);
}

inline std::complex<double> rand_complex(std::mt19937_64& rng, double scale = 1.0) {
  return {scale * (2.0 * rand_unit(rng) - 1.0), scale * (2.0 * rand_unit(rng) - 1.0)};
}

inline int rand_index(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace ergo
