#include "molcap/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace molcap {

namespace {

// Series expansion of the regularized lower incomplete gamma P(a, x).
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 2000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), modified Lentz.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 2000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) throw std::domain_error("gamma_q: need a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

Chi2Result chi2_two_sample(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b,
                           double min_expected) {
  const std::size_t bins = std::max(a.size(), b.size());
  double na = 0, nb = 0;
  for (auto v : a) na += static_cast<double>(v);
  for (auto v : b) nb += static_cast<double>(v);
  Chi2Result out;
  if (na == 0 || nb == 0 || bins == 0) return out;

  const auto at = [](const std::vector<std::int64_t>& h, std::size_t i) {
    return i < h.size() ? static_cast<double>(h[i]) : 0.0;
  };

  // Merge from the top down so sparse tail outcomes share one bin.
  std::vector<std::pair<double, double>> merged;  // (a count, b count)
  double acc_a = 0, acc_b = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    acc_a += at(a, i);
    acc_b += at(b, i);
    const double pooled = acc_a + acc_b;
    const double ea = pooled * na / (na + nb);
    const double eb = pooled * nb / (na + nb);
    if (ea >= min_expected && eb >= min_expected) {
      merged.emplace_back(acc_a, acc_b);
      acc_a = acc_b = 0;
    }
  }
  if (acc_a + acc_b > 0) {
    if (!merged.empty()) {
      merged.back().first += acc_a;
      merged.back().second += acc_b;
    } else {
      merged.emplace_back(acc_a, acc_b);
    }
  }

  if (merged.size() < 2) return out;  // nothing to compare, p = 1
  double stat = 0;
  for (const auto& [ca, cb] : merged) {
    const double pooled = ca + cb;
    const double ea = pooled * na / (na + nb);
    const double eb = pooled * nb / (na + nb);
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  out.stat = stat;
  out.df = static_cast<int>(merged.size()) - 1;
  out.p_value = gamma_q(0.5 * out.df, 0.5 * stat);
  return out;
}

ProportionZResult two_proportion_z(std::int64_t successes_a, std::int64_t n_a,
                                   std::int64_t successes_b, std::int64_t n_b) {
  ProportionZResult out;
  if (n_a <= 0 || n_b <= 0) return out;
  const double pa = static_cast<double>(successes_a) / static_cast<double>(n_a);
  const double pb = static_cast<double>(successes_b) / static_cast<double>(n_b);
  const double pooled =
      static_cast<double>(successes_a + successes_b) / static_cast<double>(n_a + n_b);
  const double var = pooled * (1.0 - pooled) *
                     (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b));
  if (var <= 0) return out;  // identical degenerate proportions
  out.z = (pa - pb) / std::sqrt(var);
  out.p_value = 2.0 * normal_tail(std::fabs(out.z));
  return out;
}

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t n, double z) {
  WilsonInterval w;
  if (n <= 0) return w;
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double center = p + z2 / (2.0 * nd);
  const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
  w.lo = std::max(0.0, (center - half) / denom);
  w.hi = std::min(1.0, (center + half) / denom);
  return w;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace molcap
