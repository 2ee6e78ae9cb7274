#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace alkd {

// All randomness in the pipeline goes through these helpers instead of the
// <random> distributions, which are implementation-defined and would break
// byte-identical reproducibility across standard libraries.

inline std::mt19937_64 make_engine(uint64_t seed) { return std::mt19937_64(seed); }

// Derive an independent stream from (seed, tag), e.g. one per session id.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0,1) with 53 random bits.
inline double uniform_double(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(eng);
}

// Unbiased uniform integer in [0, n) via rejection.
inline uint64_t uniform_index(std::mt19937_64& eng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& eng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_index(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace alkd
