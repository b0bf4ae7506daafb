#pragma once

#include <optional>
#include <vector>

#include "molcap/channel.hpp"
#include "molcap/production.hpp"
#include "molcap/rng.hpp"
#include "molcap/types.hpp"

namespace molcap {

inline constexpr double kDominationTol = 1e-9;

/// Witness that one coefficient profile can be synthesized from another by a
/// sub-stochastic non-negative convolution kernel q: target_j = (q * p)_j.
struct DominationCertificate {
  std::vector<double> q;   // length = target profile length; entries >= 0
  double mass = 0;         // sum of q
  double residual = 0;     // max |target_j - (q * p)_j| after clamping
};

/// Decides whether `target` can be synthesized from `p`. The triangular
/// system target = q * p has a unique solution by forward substitution, so
/// this is a complete decision procedure: a certificate is returned iff every
/// kernel entry is >= -tol_q (small negatives are clamped to zero) and the
/// total mass is <= 1 + tol_q. Requires p.coeffs()[0] > 0.
std::optional<DominationCertificate> solve_domination(const ChannelProfile& p,
                                                      const ChannelProfile& target,
                                                      double tol_q = kDominationTol);

/// The memoryless profile (sum of target coefficients) that always dominates
/// `target`. Degenerate when the sum is zero (its p0 is then 0 and
/// solve_domination will refuse it).
ChannelProfile memoryless_dominator(const ChannelProfile& target);

/// Transmitter-side convolution of a codeword with the certified kernel:
/// x_j = sum_{k<=j} q_{j-k} xt_k. The physical channel then presents the
/// target profile's output statistics for xt.
ReleaseSequence precode_transmitter(const DominationCertificate& q, const ReleaseSequence& xt);

/// Outcome of replaying a precoded sequence through the storage dynamics.
/// When f is concave, the base sequence feasible and the kernel mass <= 1,
/// the precoded sequence is feasible and its storage trace dominates the
/// convolution of the kernel with the base trace; both facts are checked
/// directly here. Hypothesis failures are reported as flags (never thrown)
/// so the necessity of each hypothesis can be probed.
struct LemmaCheck {
  bool concave_f = false;
  bool base_feasible = false;
  bool mass_ok = false;
  bool hypotheses_ok() const { return concave_f && base_feasible && mass_ok; }

  ReleaseSequence x;                  // precoded releases
  bool feasible = false;              // x passes check_feasible
  bool strengthened_ok = false;       // s_j >= sum_k q_{j-k} st_k at every j
  std::vector<double> dominating_s;   // the convolution lower bound above
  FeasibilityTrace trace;             // storage trace of x
};

LemmaCheck verify_lemma_a1(const ProductionFunction& f, const DominationCertificate& q,
                           const ReleaseSequence& xt);

/// Jensen-style sanity check: f(sum alpha_i v_i) >= sum alpha_i f(v_i) - tol,
/// valid for concave f with f(0) >= 0 and sub-unit weights.
bool superadditivity_check(const ProductionFunction& f, const std::vector<double>& alphas,
                           const std::vector<double>& vs);

/// Receiver-side conversion: each received count is split multinomially
/// across later slots with kernel weights (sequential binomial splits), so
/// the converted series is distributed as the dominated profile's output.
/// Shares falling beyond the block and the unassigned remainder are returned
/// as leftovers for mass accounting.
struct ThinResult {
  ReceivedSeries y_tilde;
  std::vector<std::int64_t> leftover;  // per source slot
};

ThinResult thin_receiver_detailed(Rng& rng, const DominationCertificate& q,
                                  const ReceivedSeries& y);

ReceivedSeries thin_receiver(Rng& rng, const DominationCertificate& q, const ReceivedSeries& y);

}  // namespace molcap
