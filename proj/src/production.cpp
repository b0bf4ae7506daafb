#include "molcap/production.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace molcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonneg(double v, const char* what) {
  if (!(v >= 0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

// Golden-section maximization of g on [lo, hi]; g must be continuous.
double golden_max(const auto& g, double lo, double hi, double tol) {
  constexpr double kPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kPhi * (b - a);
  double x2 = a + kPhi * (b - a);
  double g1 = g(x1), g2 = g(x2);
  while (b - a > tol) {
    if (g1 < g2) {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + kPhi * (b - a);
      g2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - kPhi * (b - a);
      g1 = g(x1);
    }
  }
  return std::max(g1, g2);
}

}  // namespace

ProductionFunction ProductionFunction::affine(double rate) {
  require_nonneg(rate, "affine rate");
  ProductionFunction f;
  f.family_ = ProductionFamily::affine;
  f.rate_ = rate;
  return f;
}

ProductionFunction ProductionFunction::affine_capped(double rate, double cap) {
  require_nonneg(rate, "affine_capped rate");
  require_nonneg(cap, "affine_capped cap");
  ProductionFunction f;
  f.family_ = ProductionFamily::affine_capped;
  f.rate_ = rate;
  f.cap_ = cap;
  return f;
}

ProductionFunction ProductionFunction::sqrt_offset(double offset) {
  if (!(offset > 0) || !std::isfinite(offset))
    throw std::invalid_argument("sqrt_offset offset must be finite and > 0");
  ProductionFunction f;
  f.family_ = ProductionFamily::sqrt_offset;
  f.offset_ = offset;
  return f;
}

ProductionFunction ProductionFunction::piecewise_linear(std::vector<Knot> knots) {
  if (knots.size() < 2)
    throw std::invalid_argument("piecewise_linear needs at least two knots");
  if (knots.front().s != 0)
    throw std::invalid_argument("piecewise_linear knots must start at s = 0");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    require_nonneg(knots[i].s, "knot s");
    require_nonneg(knots[i].f, "knot f");
    if (knots[i].f < knots[i].s)
      throw std::invalid_argument("piecewise_linear requires f(s) >= s at every knot");
    if (i > 0) {
      if (knots[i].s <= knots[i - 1].s)
        throw std::invalid_argument("piecewise_linear knots must be strictly increasing in s");
      if (knots[i].f < knots[i - 1].f)
        throw std::invalid_argument("piecewise_linear values must be non-decreasing");
    }
  }
  ProductionFunction f;
  f.family_ = ProductionFamily::piecewise_linear;
  f.knots_ = std::move(knots);
  return f;
}

double ProductionFunction::evaluate(double s) const {
  switch (family_) {
    case ProductionFamily::affine:
      return s + rate_;
    case ProductionFamily::affine_capped:
      return std::min(s + rate_, cap_);
    case ProductionFamily::sqrt_offset:
      return std::sqrt(s + offset_);
    case ProductionFamily::piecewise_linear: {
      const auto& k = knots_;
      if (s >= k.back().s) {
        const auto& a = k[k.size() - 2];
        const auto& b = k.back();
        const double slope = (b.f - a.f) / (b.s - a.s);
        return b.f + slope * (s - b.s);
      }
      auto it = std::upper_bound(k.begin(), k.end(), s,
                                 [](double v, const Knot& kn) { return v < kn.s; });
      const Knot& hi = *it;
      const Knot& lo = *(it - 1);
      const double t = (s - lo.s) / (hi.s - lo.s);
      return lo.f + t * (hi.f - lo.f);
    }
  }
  throw ModelError("unknown production family");
}

double eval_f(const ProductionFunction& f, double s) {
  if (!(s >= 0))
    throw std::domain_error("eval_f: storage level must be >= 0");
  const double phi = compute_phi(f);
  if (s > phi) {
    std::clog << "molcap: eval_f input " << s << " clamped to saturation level "
              << phi << "\n";
    s = phi;
  }
  return f.evaluate(s);
}

double compute_phi(const ProductionFunction& f, double tol, long max_iter) {
  if (!(tol > 0)) throw std::invalid_argument("compute_phi: tol must be > 0");
  double phi = kInf;
  switch (f.family()) {
    case ProductionFamily::affine:
      phi = f.rate() > 0 ? kInf : 0.0;
      break;
    case ProductionFamily::affine_capped:
      phi = f.rate() > 0 ? f.cap() : 0.0;
      break;
    case ProductionFamily::sqrt_offset:
      // Fixed point of sqrt(s + c): positive root of s^2 - s - c = 0.
      phi = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * f.offset()));
      break;
    case ProductionFamily::piecewise_linear: {
      // The idle trace climbs to the first zero of g(s) = f(s) - s.
      const auto& kn = f.knots();
      const auto g = [&](double s) { return f.evaluate(s) - s; };
      if (g(0) <= 0) return 0.0;
      phi = kInf;
      for (std::size_t i = 0; i + 1 < kn.size() && phi == kInf; ++i) {
        const double ga = g(kn[i].s), gb = g(kn[i + 1].s);
        if (ga < -tol)
          throw ModelError("compute_phi: production went negative inside the knot range");
        if (gb <= 0)
          phi = kn[i].s + ga * (kn[i + 1].s - kn[i].s) / (ga - gb);
      }
      if (phi == kInf) {
        const double g_last = g(kn.back().s);
        const std::size_t m = kn.size();
        const double slope =
            (kn[m - 1].f - kn[m - 2].f) / (kn[m - 1].s - kn[m - 2].s);
        if (slope < 1.0 && g_last > 0)
          phi = kn.back().s + g_last / (1.0 - slope);
        else if (g_last <= 0)
          phi = kn.back().s;
      }
      break;
    }
  }
  (void)max_iter;
  if (phi > kDivergenceThreshold) return kInf;
  return phi;
}

double delta_u(const ProductionFunction& f, double phi, int grid_size) {
  if (grid_size < 2) throw std::invalid_argument("delta_u: grid_size must be >= 2");
  switch (f.family()) {
    case ProductionFamily::affine:
      return f.rate();
    case ProductionFamily::affine_capped:
      return std::min(f.rate(), f.cap());
    default:
      break;
  }
  const auto g = [&](double s) { return f.evaluate(s) - s; };
  double hi = phi;
  if (is_unbounded(phi)) {
    // Only piecewise_linear can reach here; its tail is linear, so the
    // supremum lives on the knot range unless the tail keeps growing.
    const auto& kn = f.knots();
    const std::size_t m = kn.size();
    const double slope = (kn[m - 1].f - kn[m - 2].f) / (kn[m - 1].s - kn[m - 2].s);
    if (slope > 1.0) return kInf;
    hi = kn.back().s;
  }
  double best = g(0);
  double best_s = 0;
  for (int i = 1; i <= grid_size; ++i) {
    const double s = hi * static_cast<double>(i) / grid_size;
    const double v = g(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  if (f.family() == ProductionFamily::piecewise_linear) {
    for (const Knot& k : f.knots()) {
      if (k.s <= hi && g(k.s) > best) {
        best = g(k.s);
        best_s = k.s;
      }
    }
  }
  const double h = hi / grid_size;
  const double lo_b = std::max(0.0, best_s - h);
  const double hi_b = std::min(hi, best_s + h);
  if (hi_b > lo_b) best = std::max(best, golden_max(g, lo_b, hi_b, 1e-10));
  return best;
}

double delta_l(const ProductionFunction& f, double s_probe, int window) {
  const double phi = compute_phi(f);
  if (!is_unbounded(phi))
    throw PreconditionError("delta_l requires an unbounded reservoir (phi = infinity)");
  if (f.family() == ProductionFamily::affine) return f.rate();
  if (!(s_probe > 0)) throw std::invalid_argument("delta_l: s_probe must be > 0");
  if (window < 0) throw std::invalid_argument("delta_l: window must be >= 0");
  double lo = kInf;
  double s = s_probe;
  for (int k = 0; k <= window; ++k, s *= 2.0) lo = std::min(lo, f.evaluate(s) - s);
  return lo;
}

double step_state(const ProductionFunction& f, double s, double x) {
  if (!(s >= 0)) throw std::domain_error("step_state: storage must be >= 0");
  if (!(x >= 0)) throw std::domain_error("step_state: release must be >= 0");
  if (x > s) throw FeasibilityError("step_state: release exceeds storage");
  return eval_f(f, s - x);
}

FeasibilityTrace check_feasible(const ProductionFunction& f, const ReleaseSequence& x) {
  FeasibilityTrace trace;
  trace.s_trace.reserve(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    trace.s_trace.push_back(s);
    if (x[i] > s + kFeasibilityTol) {
      trace.ok = false;
      if (!trace.first_violation) trace.first_violation = i;
    }
    s = f.evaluate(std::max(s - x[i], 0.0));
  }
  return trace;
}

bool is_concave(const ProductionFunction& f, int grid_size) {
  if (grid_size < 3) throw std::invalid_argument("is_concave: grid_size must be >= 3");
  switch (f.family()) {
    case ProductionFamily::affine:
    case ProductionFamily::affine_capped:
    case ProductionFamily::sqrt_offset:
      return true;
    case ProductionFamily::piecewise_linear: {
      const auto& kn = f.knots();
      double prev = kInf;
      for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
        const double slope = (kn[i + 1].f - kn[i].f) / (kn[i + 1].s - kn[i].s);
        if (slope > prev + 1e-12) return false;
        prev = slope;
      }
      return true;
    }
  }
  return false;
}

}  // namespace molcap
