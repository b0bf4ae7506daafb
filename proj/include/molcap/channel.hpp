#pragma once

#include <vector>

#include "molcap/rng.hpp"
#include "molcap/types.hpp"

namespace molcap {

/// Finite impulse-response profile of the diffusion medium: the mean count
/// contributed to slot i+j per mole released at slot i is coeffs[j].
///
/// coeffs[0] must be positive for any operation that inverts the profile
/// (domination, exact mutual information); construction itself only requires
/// a non-empty, non-negative list so that degenerate profiles can be
/// represented and flagged by their consumers.
class ChannelProfile {
 public:
  explicit ChannelProfile(std::vector<double> coeffs);

  const std::vector<double>& coeffs() const { return coeffs_; }
  std::size_t memory() const { return coeffs_.size() - 1; }  // ISI length L
  double p0() const { return coeffs_.front(); }

 private:
  std::vector<double> coeffs_;
};

/// Mean reception counts: lambda_i = sum_{j<=min(i,L)} p_j x_{i-j}.
std::vector<double> convolve_mean(const ChannelProfile& p, const ReleaseSequence& x);

/// Independent Poisson counts, one per mean. Deterministic given the
/// generator state.
ReceivedSeries sample_outputs(Rng& rng, const std::vector<double>& lambdas);

/// log P[Y = y] for Y ~ Poisson(lambda), with log_pmf(0, 0) = 0 and
/// log_pmf(y > 0, 0) = -infinity.
double poisson_log_pmf(std::int64_t y, double lambda);

/// Smallest y_max such that P[Y > y_max] < tail_mass for Y ~ Poisson(lambda).
std::int64_t poisson_truncation_point(double lambda, double tail_mass = 1e-12);

}  // namespace molcap
