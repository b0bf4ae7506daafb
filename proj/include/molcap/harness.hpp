#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molcap/adaptation.hpp"
#include "molcap/capacity.hpp"
#include "molcap/channel.hpp"
#include "molcap/production.hpp"
#include "molcap/rng.hpp"
#include "molcap/stats.hpp"
#include "molcap/types.hpp"

namespace molcap {

/// A block code over {0, level} release amounts. Codewords all satisfy the
/// storage constraint once the transmitter idles for warmup_slots first; the
/// warm-up is shared by all codewords so transmissions stay aligned.
struct Codebook {
  std::vector<ReleaseSequence> codewords;
  double level = 0;
  int warmup_slots = 0;
  double rate_nats = 0;           // ln(M) / n, warm-up excluded
  double rate_with_warmup = 0;    // ln(M) / (n + warmup)
};

/// Randomly drawn on/off codebook (seeded). Each codeword is made feasible by
/// the smallest shared idle prefix; throws FeasibilityError when no amount of
/// idling suffices (saturating reservoir too small for the drawn pattern).
Codebook build_onoff_codebook(const ProductionFunction& f, int n, int m_messages,
                              double level, Rng& rng);

/// Maximum-likelihood message index under the given profile; ties break
/// toward the smallest index.
std::size_t ml_decode(const ChannelProfile& p, const Codebook& codebook,
                      const ReceivedSeries& y);

struct ErrorRateResult {
  double rate = 0;
  WilsonInterval wilson;          // 95%
  std::int64_t trials = 0;
  std::int64_t errors = 0;
  std::uint64_t outcome_digest = 0;          // FNV over (sent, decoded) pairs
  std::vector<std::uint8_t> outcomes;        // per-trial error bits, kept while small
};

/// Monte-Carlo average error probability of the codebook on channel p with
/// uniform messages. Trial t uses substream t of `rng`, so results are
/// independent of `threads` (only the work split changes).
ErrorRateResult error_rate(const ProductionFunction& f, const ChannelProfile& p,
                           const Codebook& codebook, std::int64_t trials, const Rng& rng,
                           int threads = 1);

enum class EquivalenceMode { precode, thinning };

/// Side-by-side comparison of a reference transmission on the dominated
/// profile against the adapted transmission on the physical profile:
///   precode  - transmitter convolves each codeword with the certified kernel
///              (requires concave f);
///   thinning - transmitter is unchanged; the receiver splits its counts.
/// Both arms of trial t reuse the same substreams so an identity kernel
/// reproduces the reference arm bit for bit; the per-slot histograms and
/// error rates are then compared (pooled chi-square, two-proportion z).
struct EquivalenceReport {
  std::int64_t trials = 0;
  std::int64_t errors_ref = 0;     // codebook on the dominated profile
  std::int64_t errors_adapted = 0; // precoded/thinned arm on the physical profile
  double error_rate_ref = 0;
  double error_rate_adapted = 0;
  std::vector<Chi2Result> per_slot;
  double chi2_pooled = 0;
  int df_pooled = 0;
  double p_value_chi2 = 1;
  ProportionZResult z;
  bool pass = false;               // fixed acceptance level alpha = 0.01
  std::uint64_t outcome_digest = 0;
};

EquivalenceReport precoded_equivalence_test(const ProductionFunction& f,
                                            const ChannelProfile& p,
                                            const ChannelProfile& p_tilde,
                                            const Codebook& codebook_for_p_tilde,
                                            std::int64_t trials, const Rng& rng,
                                            EquivalenceMode mode = EquivalenceMode::precode,
                                            int threads = 1);

/// Cesaro-averaged state occupancy of the policy-driven storage chain versus
/// the power-iteration stationary law, reported as a total-variation trace
/// (one entry per simulated step).
struct AmsReport {
  std::vector<double> tv_trace;
  std::vector<double> stationary;
  std::vector<double> occupancy;
};

AmsReport ams_empirical_check(const ProductionFunction& f, const ReleasePolicy& policy,
                              std::int64_t n, Rng& rng, double tol_tv = 1e-10,
                              long max_iter = 1000000);

/// Greedy feasible release draw: x_i = u_i * s_i with u_i uniform on [0, 1),
/// one uniform per slot.
ReleaseSequence random_feasible_sequence(const ProductionFunction& f, std::size_t len,
                                         Rng& rng);

/// Random non-negative kernel with total mass uniform on [0, 1): len uniform
/// shape draws plus one mass draw.
DominationCertificate random_subunit_kernel(std::size_t len, Rng& rng);

/// Randomized replay of the precoding feasibility guarantee on one
/// production function: `trials` draws of (feasible sequence, sub-unit
/// kernel), counting violations of feasibility and of the trace-domination
/// invariant.
struct LemmaSweepResult {
  std::int64_t trials = 0;
  std::int64_t feasibility_violations = 0;
  std::int64_t strengthened_violations = 0;
  bool concave = false;
  std::optional<std::int64_t> first_violation_trial;
};

LemmaSweepResult lemma_random_sweep(const ProductionFunction& f, std::int64_t trials,
                                    std::size_t xt_len, std::size_t q_len_max, const Rng& rng);

}  // namespace molcap
