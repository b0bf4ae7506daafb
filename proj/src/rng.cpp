#include "molcap/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace molcap {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t splitmix64_at(std::uint64_t s, std::uint64_t i) {
  return splitmix64_mix(s + kGolden * (i + 1));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64_at(seed, 0)) {}

Rng Rng::stream(std::uint64_t index) const {
  return Rng(splitmix64_at(seed_, index + 1));
}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw std::domain_error("next_below: n must be positive");
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

std::int64_t Rng::poisson(double lambda) {
  if (lambda < 0 || !std::isfinite(lambda))
    throw std::domain_error("poisson: lambda must be finite and >= 0");
  if (lambda == 0) return 0;

  if (lambda < 30.0) {
    // Sequential inversion.
    const double u = next_unit();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (k > 2000) break;  // cdf is numerically 1 long before this
    }
    return k;
  }

  // Hoermann's PTRD transformed-rejection sampler.
  const double smu = std::sqrt(lambda);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_sqrt_2pi = 0.91893853320467274178;

  for (;;) {
    double u;
    double v = next_unit();
    if (v <= 0.86 * vr) {
      u = v / vr - 0.43;
      return static_cast<std::int64_t>(
          std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + lambda + 0.445));
    }
    if (v >= vr) {
      u = next_unit() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = next_unit() * vr;
    }
    const double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.445);
    if (kf < 0) continue;
    const std::int64_t k = static_cast<std::int64_t>(kf);
    v = v * inv_alpha / (a / (us * us) + b);
    if (k >= 10) {
      const double kd = kf;
      if (std::log(v * smu) <=
          (kd + 0.5) * std::log(lambda / kd) - lambda - log_sqrt_2pi + kd -
              (1.0 / 12.0 - 1.0 / (360.0 * kd * kd)) / kd) {
        return k;
      }
    } else {
      if (std::log(v) <= kf * std::log(lambda) - lambda - std::lgamma(kf + 1.0)) {
        return k;
      }
    }
  }
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n < 0) throw std::domain_error("binomial: n must be >= 0");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (next_unit() < p) ++count;
  }
  return count;
}

}  // namespace molcap
