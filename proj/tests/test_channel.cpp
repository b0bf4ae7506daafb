#include <cmath>
#include <vector>

#include "doctest.h"
#include "molcap/channel.hpp"
#include "molcap/rng.hpp"

using namespace molcap;

TEST_CASE("convolve_mean arithmetic") {
  const ChannelProfile p({2, 1});
  CHECK(convolve_mean(p, {1, 0, 3}) == std::vector<double>{2, 1, 6});

  const ChannelProfile ones({1, 1, 1});
  CHECK(convolve_mean(ones, {1, 1, 1}) == std::vector<double>{1, 2, 3});

  // Memoryless profile scales elementwise.
  const ChannelProfile memoryless({0.7});
  const ReleaseSequence x{0.5, 2.0, 0.0, 4.0};
  const auto lam = convolve_mean(memoryless, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(lam[i] == doctest::Approx(0.7 * x[i]).epsilon(1e-15));
}

TEST_CASE("convolve_mean is linear") {
  Rng rng(4242);
  const ChannelProfile p({1.2, 0.5, 0.25, 0.1});
  for (int trial = 0; trial < 20; ++trial) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(trial));
    ReleaseSequence x(16), x2(16), mix(16);
    const double a = stream.next_unit() * 3;
    const double b = stream.next_unit() * 3;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = stream.next_unit();
      x2[i] = stream.next_unit();
      mix[i] = a * x[i] + b * x2[i];
    }
    const auto left = convolve_mean(p, mix);
    const auto l1 = convolve_mean(p, x);
    const auto l2 = convolve_mean(p, x2);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(left[i] == doctest::Approx(a * l1[i] + b * l2[i]).epsilon(1e-12));
  }
}

TEST_CASE("log pmf values and conventions") {
  CHECK(poisson_log_pmf(0, 0) == 0.0);
  CHECK(poisson_log_pmf(0, 3.5) == doctest::Approx(-3.5).epsilon(1e-15));
  // Frozen from 3 ln 2 - 2 - ln 6.
  CHECK(poisson_log_pmf(3, 2) == doctest::Approx(-1.7123178376183152).epsilon(1e-12));
  CHECK(std::isinf(poisson_log_pmf(4, 0)));
  CHECK(poisson_log_pmf(4, 0) < 0);
  CHECK_THROWS_AS(poisson_log_pmf(-1, 1), std::domain_error);
}

TEST_CASE("pmf sums to one at the truncation point") {
  for (double lambda : {0.01, 0.5, 1.0, 7.3, 42.0, 135.0}) {
    const std::int64_t y_max = poisson_truncation_point(lambda, 1e-12);
    double sum = 0;
    for (std::int64_t y = 0; y <= y_max; ++y) sum += std::exp(poisson_log_pmf(y, lambda));
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    // Minimality: one fewer term leaves more than the target in the tail.
    double short_sum = sum - std::exp(poisson_log_pmf(y_max, lambda));
    CHECK(1.0 - short_sum >= 1e-12);
  }
}

TEST_CASE("sampling determinism and degenerate mean") {
  Rng a(99), b(99);
  const std::vector<double> lam{1.0, 2.0};
  CHECK(sample_outputs(a, lam) == sample_outputs(b, lam));
  Rng c(7);
  CHECK(sample_outputs(c, {0, 0, 0}) == ReceivedSeries{0, 0, 0});
  Rng d(8);
  CHECK_THROWS_AS(d.poisson(-1), std::domain_error);
}

TEST_CASE("sample mean tracks the Poisson mean") {
  const int n = 100000;
  for (double lambda : {5.0, 40.0}) {  // inversion and rejection paths
    Rng rng(1234 + static_cast<std::uint64_t>(lambda));
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(lambda));
    const double mean = sum / n;
    CHECK(std::fabs(mean - lambda) <= 3.0 * std::sqrt(lambda / n));
  }
}

TEST_CASE("sample variance tracks the Poisson variance") {
  const int n = 100000;
  for (double lambda : {5.0, 40.0}) {
    Rng rng(987 + static_cast<std::uint64_t>(lambda));
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
      const double v = static_cast<double>(rng.poisson(lambda));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // Var of the sample variance for Poisson ~ (lambda + 2 lambda^2) / n.
    const double sigma = std::sqrt((lambda + 2 * lambda * lambda) / n);
    CHECK(std::fabs(var - lambda) <= 4.0 * sigma);
  }
}

TEST_CASE("rejection sampler matches the exact pmf") {
  // Goodness of fit at a mean deep in the rejection branch.
  const double lambda = 45.0;
  const int n = 200000;
  Rng rng(5150);
  std::vector<std::int64_t> hist(200, 0);
  for (int i = 0; i < n; ++i) {
    const std::int64_t v = rng.poisson(lambda);
    REQUIRE(v >= 0);
    hist[static_cast<std::size_t>(std::min<std::int64_t>(v, 199))]++;
  }
  // Pearson statistic against exact probabilities, merging thin tails.
  double stat = 0;
  int df = -1;
  double acc_obs = 0, acc_exp = 0;
  for (std::size_t y = 0; y < hist.size(); ++y) {
    acc_obs += static_cast<double>(hist[y]);
    acc_exp += n * std::exp(poisson_log_pmf(static_cast<std::int64_t>(y), lambda));
    if (acc_exp >= 5.0) {
      stat += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
      ++df;
      acc_obs = acc_exp = 0;
    }
  }
  if (acc_exp > 0) stat += (acc_obs - acc_exp) * (acc_obs - acc_exp) / std::max(acc_exp, 1e-9);
  // Generous bound: chi-square with ~60 dof exceeding 120 has p < 1e-5.
  CHECK(df > 20);
  CHECK(stat < 2.0 * df);
}

TEST_CASE("substreams are independent and reproducible") {
  Rng root(2024);
  Rng s0 = root.stream(0);
  Rng s1 = root.stream(1);
  Rng s0_again = Rng(2024).stream(0);
  bool all_equal = true;
  for (int i = 0; i < 64; ++i) {
    const auto a = s0.next_u64();
    const auto b = s1.next_u64();
    if (a != b) all_equal = false;
    CHECK(a == s0_again.next_u64());
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("profile construction rules") {
  CHECK_THROWS_AS(ChannelProfile({}), std::invalid_argument);
  CHECK_THROWS_AS(ChannelProfile({1.0, -0.1}), std::invalid_argument);
  const ChannelProfile degenerate({0.0, 0.0});  // representable, consumers refuse it
  CHECK(degenerate.p0() == 0.0);
  CHECK(degenerate.memory() == 1);
}
