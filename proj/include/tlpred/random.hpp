// Seeded random streams.
//
// Every stochastic routine takes an explicit seed. Independent workers get
// their own stream from (seed, stream index) so that results never depend on
// scheduling. Uniform draws are produced from the raw 64-bit output rather
// than std::uniform_real_distribution, whose algorithm is unspecified.

#ifndef TLPRED_RANDOM_HPP
#define TLPRED_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace tlpred {

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x746c7072u};
    engine_.seed(seq);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x < limit);
    return x % n;
  }

  double normal() {
    // Box-Muller; the second variate is discarded to keep the stream position
    // a simple function of the number of calls.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tlpred

#endif  // TLPRED_RANDOM_HPP
