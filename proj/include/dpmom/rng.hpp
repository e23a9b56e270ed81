#ifndef DPMOM_RNG_HPP
#define DPMOM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "dpmom/error.hpp"

namespace dpmom {

// Deterministic counter-based stream (splitmix64). The standard library
// engines are portable but its distributions are not, so every draw used by
// the library goes through this type. Same seed + same call sequence gives
// the same values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // unbiased uniform integer in [0, n)
  std::size_t below(std::size_t n) {
    check_contract(n > 0, "Rng::below: n must be positive");
    const auto bound = static_cast<std::uint64_t>(n);
    const std::uint64_t residue =
        (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    if (residue == 0) return static_cast<std::size_t>(next_u64() % bound);
    const std::uint64_t limit = 0 - residue;  // 2^64 - residue, wrapped
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x < limit) return static_cast<std::size_t>(x % bound);
    }
  }

  // standard normal via Box-Muller (cosine branch only, stateless)
  double normal() {
    const double u1 = 1.0 - next_double();  // (0, 1], log is safe
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Derive an independent stream; the parent is unchanged.
  [[nodiscard]] Rng split(std::uint64_t stream) const {
    Rng probe(state_ ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return Rng(probe.next_u64());
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // index drawn with probability weights[i] / sum(weights); caller
  // guarantees a strictly positive total
  std::size_t weighted_index(std::span<const double> weights, double total) {
    check_contract(total > 0.0, "Rng::weighted_index: nonpositive total");
    const double r = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

// Rng keyed by a seed plus arbitrary coordinates (repeat, stage, cell, ...).
// Used to make grid evaluations independent of execution order.
template <typename... Parts>
Rng derive_rng(std::uint64_t seed, Parts... parts) {
  Rng r(seed);
  ((r = r.split(static_cast<std::uint64_t>(parts))), ...);
  return r;
}

}  // namespace dpmom

#endif  // DPMOM_RNG_HPP
