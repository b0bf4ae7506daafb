#pragma once

#include <cstdint>
#include <random>

namespace molcap {

/// Reproducible random source.
///
/// All randomness in the toolkit flows through this class so that results are
/// bit-identical across platforms and parallelism degrees. Substream rule:
/// stream(i) of a generator created with seed s is seeded with the i-th output
/// of the SplitMix64 sequence started at s. Samplers below consume uniforms in
/// a fixed, documented order; none of the <random> distributions are used
/// because their draw sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent child stream. O(1) in `index`.
  Rng stream(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double next_unit();

  /// Uniform on {0, ..., n-1} by rejection (no modulo bias).
  std::uint64_t next_below(std::uint64_t n);

  /// Poisson draw: sequential inversion for lambda < 30, transformed
  /// rejection (PTRD) otherwise. Throws std::domain_error for lambda < 0.
  std::int64_t poisson(double lambda);

  /// Binomial draw as a count of n Bernoulli(p) trials; consumes no uniforms
  /// when p <= 0 or p >= 1.
  std::int64_t binomial(std::int64_t n, double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

/// SplitMix64 output for the i-th step from state `s` (stateless form).
std::uint64_t splitmix64_at(std::uint64_t s, std::uint64_t i);

}  // namespace molcap
