#include "molcap/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace molcap {

namespace {

// (q * p)_j truncated to j < n.
std::vector<double> convolve(const std::vector<double>& q, const std::vector<double>& p,
                             std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t mmax = std::min(j, q.size() - 1);
    double acc = 0.0;
    for (std::size_t m = 0; m <= mmax; ++m) {
      const std::size_t k = j - m;
      if (k < p.size()) acc += q[m] * p[k];
    }
    out[j] = acc;
  }
  return out;
}

}  // namespace

std::optional<DominationCertificate> solve_domination(const ChannelProfile& p,
                                                      const ChannelProfile& target,
                                                      double tol_q) {
  if (!(p.p0() > 0)) throw std::domain_error("solve_domination: p0 must be > 0");
  const auto& pc = p.coeffs();
  const auto& tc = target.coeffs();
  const std::size_t n = tc.size();

  std::vector<double> q(n, 0.0);
  double mass = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = tc[j];
    for (std::size_t m = 0; m < j; ++m) {
      const std::size_t k = j - m;
      if (k < pc.size()) acc -= q[m] * pc[k];
    }
    q[j] = acc / pc[0];
    if (q[j] < -tol_q) return std::nullopt;
    if (q[j] < 0) q[j] = 0.0;
    mass += q[j];
  }
  if (mass > 1.0 + tol_q) return std::nullopt;

  DominationCertificate cert;
  cert.q = std::move(q);
  cert.mass = mass;
  const std::vector<double> rec = convolve(cert.q, pc, n);
  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) residual = std::max(residual, std::fabs(tc[j] - rec[j]));
  cert.residual = residual;
  return cert;
}

ChannelProfile memoryless_dominator(const ChannelProfile& target) {
  const auto& tc = target.coeffs();
  return ChannelProfile({std::accumulate(tc.begin(), tc.end(), 0.0)});
}

ReleaseSequence precode_transmitter(const DominationCertificate& q, const ReleaseSequence& xt) {
  for (double v : xt)
    if (!(v >= 0)) throw std::domain_error("precode_transmitter: releases must be >= 0");
  return convolve(q.q, xt, xt.size());
}

LemmaCheck verify_lemma_a1(const ProductionFunction& f, const DominationCertificate& q,
                           const ReleaseSequence& xt) {
  LemmaCheck out;
  out.concave_f = is_concave(f);
  const FeasibilityTrace base = check_feasible(f, xt);
  out.base_feasible = base.ok;
  out.mass_ok = q.mass <= 1.0 + kDominationTol;

  out.x = precode_transmitter(q, xt);
  out.trace = check_feasible(f, out.x);
  out.feasible = out.trace.ok;
  out.dominating_s = convolve(q.q, base.s_trace, base.s_trace.size());
  out.strengthened_ok = true;
  for (std::size_t j = 0; j < out.dominating_s.size(); ++j) {
    if (out.trace.s_trace[j] < out.dominating_s[j] - kFeasibilityTol) {
      out.strengthened_ok = false;
      break;
    }
  }
  return out;
}

bool superadditivity_check(const ProductionFunction& f, const std::vector<double>& alphas,
                           const std::vector<double>& vs) {
  if (alphas.size() != vs.size())
    throw std::invalid_argument("superadditivity_check: weight/point length mismatch");
  const double phi = compute_phi(f);
  double alpha_sum = 0.0, mix = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0)) throw std::domain_error("superadditivity_check: weights must be >= 0");
    if (!(vs[i] >= 0) || vs[i] > phi)
      throw std::domain_error("superadditivity_check: points must lie in [0, phi]");
    alpha_sum += alphas[i];
    mix += alphas[i] * vs[i];
    rhs += alphas[i] * f.evaluate(vs[i]);
  }
  if (alpha_sum > 1.0 + 1e-12)
    throw std::domain_error("superadditivity_check: weights must sum to <= 1");
  return f.evaluate(mix) >= rhs - kFeasibilityTol;
}

ThinResult thin_receiver_detailed(Rng& rng, const DominationCertificate& q,
                                  const ReceivedSeries& y) {
  if (q.mass > 1.0 + kDominationTol)
    throw CertificateError("thin_receiver: kernel mass exceeds 1");
  const std::size_t n = y.size();
  const auto& kernel = q.q;
  ThinResult out;
  out.y_tilde.assign(n, 0);
  out.leftover.assign(n, 0);

  for (std::size_t k = 0; k < n; ++k) {
    if (y[k] < 0) throw std::domain_error("thin_receiver: counts must be >= 0");
    std::int64_t remaining = y[k];
    double rem_p = 1.0;
    // Balls from slot k land in slots k, k+1, ... with weights q_0, q_1, ...;
    // what survives the sequential splits is the leftover for slot k.
    for (std::size_t m = 0; m < kernel.size() && k + m < n && remaining > 0; ++m) {
      const double pr = rem_p > 0 ? std::min(1.0, kernel[m] / rem_p) : 1.0;
      const std::int64_t share = rng.binomial(remaining, pr);
      out.y_tilde[k + m] += share;
      remaining -= share;
      rem_p -= kernel[m];
    }
    out.leftover[k] = remaining;
  }
  return out;
}

ReceivedSeries thin_receiver(Rng& rng, const DominationCertificate& q, const ReceivedSeries& y) {
  return thin_receiver_detailed(rng, q, y).y_tilde;
}

}  // namespace molcap
