#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spinn {

// Seeded generator that can derive independent, named child streams, so every
// consumer of randomness (sampling, kernel init, subsampling) gets its own
// reproducible stream from the single run seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Child stream determined only by this generator's seed and `name`.
  Rng split(std::string_view name) const;

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits; identical across standard libraries.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace spinn
