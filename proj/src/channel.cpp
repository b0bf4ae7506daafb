#include "molcap/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace molcap {

ChannelProfile::ChannelProfile(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty())
    throw std::invalid_argument("ChannelProfile: coefficient list must be non-empty");
  for (double c : coeffs_) {
    if (!(c >= 0) || !std::isfinite(c))
      throw std::invalid_argument("ChannelProfile: coefficients must be finite and >= 0");
  }
}

std::vector<double> convolve_mean(const ChannelProfile& p, const ReleaseSequence& x) {
  const auto& c = p.coeffs();
  std::vector<double> lambdas(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0))
      throw std::domain_error("convolve_mean: releases must be >= 0");
    const std::size_t jmax = std::min(i, c.size() - 1);
    double acc = 0.0;
    for (std::size_t j = 0; j <= jmax; ++j) acc += c[j] * x[i - j];
    lambdas[i] = acc;
  }
  return lambdas;
}

ReceivedSeries sample_outputs(Rng& rng, const std::vector<double>& lambdas) {
  ReceivedSeries y;
  y.reserve(lambdas.size());
  for (double l : lambdas) y.push_back(rng.poisson(l));
  return y;
}

double poisson_log_pmf(std::int64_t y, double lambda) {
  if (y < 0) throw std::domain_error("poisson_log_pmf: count must be >= 0");
  if (!(lambda >= 0)) throw std::domain_error("poisson_log_pmf: mean must be >= 0");
  if (lambda == 0)
    return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double yd = static_cast<double>(y);
  return yd * std::log(lambda) - lambda - std::lgamma(yd + 1.0);
}

std::int64_t poisson_truncation_point(double lambda, double tail_mass) {
  if (!(lambda >= 0)) throw std::domain_error("poisson_truncation_point: mean must be >= 0");
  if (!(tail_mass > 0)) throw std::invalid_argument("poisson_truncation_point: tail must be > 0");
  if (lambda == 0) return 0;
  if (lambda > 700.0) {
    // exp(-lambda) underflows; use the Chernoff bound
    // P[Y >= y] <= exp(y - lambda - y log(y / lambda)) for y > lambda,
    // which is conservative but safe for normalization purposes.
    std::int64_t y = static_cast<std::int64_t>(lambda) + 1;
    while (static_cast<double>(y) - lambda -
               static_cast<double>(y) * std::log(static_cast<double>(y) / lambda) >=
           std::log(tail_mass)) {
      ++y;
    }
    return y;
  }
  double p = std::exp(-lambda);
  double tail = 1.0 - p;
  std::int64_t y = 0;
  // Accumulate until the remaining mass drops below the target; the recurrence
  // keeps full relative accuracy for the modest means used here.
  while (tail >= tail_mass) {
    ++y;
    p *= lambda / static_cast<double>(y);
    tail -= p;
    if (y > 100000000) throw SolverError("poisson_truncation_point: no convergence", tail);
  }
  return y;
}

}  // namespace molcap
