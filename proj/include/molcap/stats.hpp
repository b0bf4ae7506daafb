#pragma once

#include <cstdint>
#include <vector>

namespace molcap {

struct Chi2Result {
  double stat = 0;
  int df = 0;
  double p_value = 1;
};

/// Two-sample chi-square homogeneity test of count histograms a and b
/// (index = outcome value). Adjacent high-index bins are merged until every
/// kept bin has pooled expected count >= min_expected in both samples.
Chi2Result chi2_two_sample(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b,
                           double min_expected = 5.0);

struct ProportionZResult {
  double z = 0;
  double p_value = 1;
};

/// Two-proportion z test on successes/trials pairs (pooled variance).
ProportionZResult two_proportion_z(std::int64_t successes_a, std::int64_t n_a,
                                   std::int64_t successes_b, std::int64_t n_b);

struct WilsonInterval {
  double lo = 0;
  double hi = 1;
};

/// Wilson score interval for a binomial proportion at confidence z (1.96 = 95%).
WilsonInterval wilson_interval(std::int64_t successes, std::int64_t n, double z = 1.959963984540054);

/// Regularized upper incomplete gamma Q(a, x); chi-square upper tail is
/// Q(df/2, x/2).
double gamma_q(double a, double x);

/// Standard normal upper tail P[Z > z].
double normal_tail(double z);

/// FNV-1a 64-bit hash over a byte sequence; used for stable config and
/// outcome digests.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 14695981039346656037ull);

}  // namespace molcap
