#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "molcap/types.hpp"

namespace molcap {

enum class ProductionFamily { affine, affine_capped, sqrt_offset, piecewise_linear };

struct Knot {
  double s = 0;
  double f = 0;
};

/// Recharge map of the transmitter storage unit: the level after one slot of
/// production, given the level at the start of the slot. Non-decreasing with
/// f(s) >= s on [0, phi], where phi is the level reached by idling forever.
///
/// Families:
///   affine           f(s) = s + v
///   affine_capped    f(s) = min(s + v, cap)
///   sqrt_offset      f(s) = sqrt(s + c)
///   piecewise_linear interpolates the knot list; beyond the last knot the
///                    final segment's slope extends.
class ProductionFunction {
 public:
  static ProductionFunction affine(double rate);
  static ProductionFunction affine_capped(double rate, double cap);
  static ProductionFunction sqrt_offset(double offset);
  static ProductionFunction piecewise_linear(std::vector<Knot> knots);

  ProductionFamily family() const { return family_; }
  double rate() const { return rate_; }
  double cap() const { return cap_; }
  double offset() const { return offset_; }
  const std::vector<Knot>& knots() const { return knots_; }

  /// Raw evaluation, no domain clamp. Callers normally want eval_f.
  double evaluate(double s) const;

 private:
  ProductionFunction() = default;

  ProductionFamily family_ = ProductionFamily::affine;
  double rate_ = 0;    // affine, affine_capped
  double cap_ = 0;     // affine_capped
  double offset_ = 0;  // sqrt_offset
  std::vector<Knot> knots_;
};

/// f(s) with the domain rule: s < 0 is a domain error; s above the saturation
/// level is clamped to it (with a note on stderr, since f is only meaningful
/// on [0, phi]).
double eval_f(const ProductionFunction& f, double s);

/// Saturation level lim f^i(0), or +infinity when the idle trace grows past
/// kDivergenceThreshold. Exact per family; `tol`/`max_iter` bound the checks
/// on the result.
double compute_phi(const ProductionFunction& f, double tol = 1e-12,
                   long max_iter = 1000000);

inline bool is_unbounded(double phi) { return phi > kDivergenceThreshold; }

/// sup over [0, phi] of the per-slot production f(s) - s. Exact for the
/// affine families; grid scan of `grid_size` points plus golden-section
/// refinement otherwise.
double delta_u(const ProductionFunction& f, double phi, int grid_size = 10000);

/// Tail production liminf_{s->inf} (f(s) - s), estimated as the minimum over
/// the geometric probe grid s_probe * 2^k, k = 0..window. Exact for affine.
/// Requires an unbounded reservoir (phi must be infinite).
double delta_l(const ProductionFunction& f, double s_probe = 1e3, int window = 20);

/// One slot: release x from storage s, then recharge. Requires 0 <= x <= s.
double step_state(const ProductionFunction& f, double s, double x);

struct FeasibilityTrace {
  bool ok = true;
  std::vector<double> s_trace;  // storage at the start of each slot, s_trace[0] = 0
  std::optional<std::size_t> first_violation;
};

/// Simulates the storage trace of a release sequence from the empty state.
/// Releases are feasible when x_i <= s_i + kFeasibilityTol. On a violation
/// the trace continues with the post-release level clamped at zero so the
/// full trace is always reported.
FeasibilityTrace check_feasible(const ProductionFunction& f, const ReleaseSequence& x);

/// Exact per family: the affine families and sqrt_offset are concave;
/// piecewise_linear is concave iff its segment slopes are non-increasing.
/// `grid_size` is accepted for interface stability and unused.
bool is_concave(const ProductionFunction& f, int grid_size = 3);

}  // namespace molcap
