#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace isac {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed split: the result depends only on the master seed and
/// the index path, never on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices) {
  std::uint64_t s = splitmix64(master);
  for (const std::uint64_t i : indices) s = splitmix64(s ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return s;
}

/// Uniform index in [0, n) by rejection; independent of the stdlib's distribution code.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Circular complex Gaussian sample with total variance `variance`.
inline std::complex<double> complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

}  // namespace isac
