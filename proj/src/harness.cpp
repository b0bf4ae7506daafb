#include "molcap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace molcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool feasible_from(const ProductionFunction& f, const ReleaseSequence& x, double s0) {
  double s = s0;
  for (double xi : x) {
    if (xi > s + kFeasibilityTol) return false;
    s = f.evaluate(std::max(s - xi, 0.0));
  }
  return true;
}

// Static trial split that is invariant to the number of workers: worker w
// handles trials t with t % threads == w, and every trial draws only from its
// own substream.
void run_trials(std::int64_t trials, int threads,
                const std::function<void(std::int64_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::int64_t t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w]() {
      for (std::int64_t t = w; t < trials; t += threads) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

std::uint64_t digest_pairs(const std::vector<std::uint32_t>& sent,
                           const std::vector<std::uint32_t>& decoded) {
  std::uint64_t h = fnv1a64(nullptr, 0);
  for (std::size_t i = 0; i < sent.size(); ++i) {
    h = fnv1a64(&sent[i], sizeof(sent[i]), h);
    h = fnv1a64(&decoded[i], sizeof(decoded[i]), h);
  }
  return h;
}

}  // namespace

Codebook build_onoff_codebook(const ProductionFunction& f, int n, int m_messages,
                              double level, Rng& rng) {
  if (n < 1) throw std::invalid_argument("build_onoff_codebook: n must be >= 1");
  if (m_messages < 1) throw std::invalid_argument("build_onoff_codebook: M must be >= 1");
  if (!(level >= 0)) throw std::domain_error("build_onoff_codebook: level must be >= 0");

  Codebook book;
  book.level = level;
  book.codewords.reserve(static_cast<std::size_t>(m_messages));
  for (int m = 0; m < m_messages; ++m) {
    ReleaseSequence w(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      if (rng.next_unit() < 0.5) w[static_cast<std::size_t>(i)] = level;
    book.codewords.push_back(std::move(w));
  }

  // Shared idle prefix: starting storage grows along the idle trace, and
  // feasibility is monotone in the starting level, so the first prefix that
  // works for the most demanding codeword works for all.
  const double phi = compute_phi(f);
  int warmup = 0;
  double s0 = 0.0;
  const auto all_feasible = [&](double start) {
    return std::all_of(book.codewords.begin(), book.codewords.end(),
                       [&](const ReleaseSequence& w) { return feasible_from(f, w, start); });
  };
  while (!all_feasible(s0)) {
    const double next = f.evaluate(std::min(s0, phi));
    if (next <= s0 + 1e-15 || warmup > 10000000)
      throw FeasibilityError(
          "build_onoff_codebook: codebook infeasible at any idle prefix "
          "(level too large for the saturating reservoir)");
    s0 = next;
    ++warmup;
  }
  book.warmup_slots = warmup;
  book.rate_nats = std::log(static_cast<double>(m_messages)) / n;
  book.rate_with_warmup = std::log(static_cast<double>(m_messages)) / (n + warmup);
  return book;
}

std::size_t ml_decode(const ChannelProfile& p, const Codebook& codebook,
                      const ReceivedSeries& y) {
  if (codebook.codewords.empty()) throw std::invalid_argument("ml_decode: empty codebook");
  std::size_t best = 0;
  double best_ll = -kInf;
  for (std::size_t m = 0; m < codebook.codewords.size(); ++m) {
    const std::vector<double> lambdas = convolve_mean(p, codebook.codewords[m]);
    double ll = 0.0;
    for (std::size_t i = 0; i < y.size() && i < lambdas.size(); ++i)
      ll += poisson_log_pmf(y[i], lambdas[i]);
    if (ll > best_ll) {
      best_ll = ll;
      best = m;
    }
  }
  return best;
}

ErrorRateResult error_rate(const ProductionFunction& f, const ChannelProfile& p,
                           const Codebook& codebook, std::int64_t trials, const Rng& rng,
                           int threads) {
  if (trials < 1) throw std::invalid_argument("error_rate: trials must be >= 1");
  const double phi = compute_phi(f);
  double warm = 0.0;
  for (int i = 0; i < codebook.warmup_slots; ++i) warm = f.evaluate(std::min(warm, phi));
  for (const auto& w : codebook.codewords)
    if (!feasible_from(f, w, warm))
      throw FeasibilityError("error_rate: codebook violates the storage constraint");

  const std::size_t m_count = codebook.codewords.size();
  std::vector<std::vector<double>> lambdas(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    lambdas[m] = convolve_mean(p, codebook.codewords[m]);

  std::vector<std::uint32_t> sent(static_cast<std::size_t>(trials));
  std::vector<std::uint32_t> decoded(static_cast<std::size_t>(trials));
  run_trials(trials, threads, [&](std::int64_t t) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(t));
    const std::size_t m = static_cast<std::size_t>(stream.next_below(m_count));
    Rng channel_stream = stream.stream(0);
    const ReceivedSeries y = sample_outputs(channel_stream, lambdas[m]);
    sent[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(m);
    decoded[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(ml_decode(p, codebook, y));
  });

  ErrorRateResult out;
  out.trials = trials;
  for (std::int64_t t = 0; t < trials; ++t)
    if (sent[static_cast<std::size_t>(t)] != decoded[static_cast<std::size_t>(t)]) ++out.errors;
  out.rate = static_cast<double>(out.errors) / static_cast<double>(trials);
  out.wilson = wilson_interval(out.errors, trials);
  out.outcome_digest = digest_pairs(sent, decoded);
  if (trials <= 10000) {
    out.outcomes.resize(static_cast<std::size_t>(trials));
    for (std::int64_t t = 0; t < trials; ++t)
      out.outcomes[static_cast<std::size_t>(t)] =
          sent[static_cast<std::size_t>(t)] != decoded[static_cast<std::size_t>(t)] ? 1 : 0;
  }
  return out;
}

EquivalenceReport precoded_equivalence_test(const ProductionFunction& f,
                                            const ChannelProfile& p,
                                            const ChannelProfile& p_tilde,
                                            const Codebook& codebook_for_p_tilde,
                                            std::int64_t trials, const Rng& rng,
                                            EquivalenceMode mode, int threads) {
  if (trials < 1) throw std::invalid_argument("precoded_equivalence_test: trials must be >= 1");
  const auto cert = solve_domination(p, p_tilde);
  if (!cert)
    throw PreconditionError("precoded_equivalence_test: profile is not dominated");
  if (mode == EquivalenceMode::precode && !is_concave(f))
    throw PreconditionError("precoded_equivalence_test: precoding requires a concave f");

  const std::size_t m_count = codebook_for_p_tilde.codewords.size();
  const std::size_t n = codebook_for_p_tilde.codewords.front().size();

  // Reference arm means (dominated profile) and adapted arm means.
  std::vector<std::vector<double>> ref_lambdas(m_count), adapted_lambdas(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& xt = codebook_for_p_tilde.codewords[m];
    ref_lambdas[m] = convolve_mean(p_tilde, xt);
    if (mode == EquivalenceMode::precode) {
      // Feasibility holds for the full transmission (idle prefix + word);
      // the prefix precodes to itself since the kernel maps zeros to zeros.
      ReleaseSequence padded(static_cast<std::size_t>(codebook_for_p_tilde.warmup_slots), 0.0);
      padded.insert(padded.end(), xt.begin(), xt.end());
      const auto check = verify_lemma_a1(f, *cert, padded);
      if (!check.feasible)
        throw FeasibilityError("precoded_equivalence_test: precoded codeword infeasible");
      adapted_lambdas[m] = convolve_mean(p, precode_transmitter(*cert, xt));
    } else {
      adapted_lambdas[m] = convolve_mean(p, xt);
    }
  }

  const std::int64_t hist_cap = 512;
  std::vector<std::vector<std::int64_t>> hist_ref(n), hist_adapted(n);
  for (std::size_t i = 0; i < n; ++i) {
    hist_ref[i].assign(static_cast<std::size_t>(hist_cap) + 1, 0);
    hist_adapted[i].assign(static_cast<std::size_t>(hist_cap) + 1, 0);
  }

  std::vector<std::uint32_t> sent(static_cast<std::size_t>(trials));
  std::vector<std::uint32_t> dec_ref(static_cast<std::size_t>(trials));
  std::vector<std::uint32_t> dec_adapted(static_cast<std::size_t>(trials));
  std::vector<ReceivedSeries> out_ref(static_cast<std::size_t>(trials));
  std::vector<ReceivedSeries> out_adapted(static_cast<std::size_t>(trials));

  run_trials(trials, threads, [&](std::int64_t t) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(t));
    const std::size_t m = static_cast<std::size_t>(stream.next_below(m_count));
    sent[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(m);

    // Both arms reuse substream 0 so an identity kernel gives equal traces.
    Rng chan_ref = stream.stream(0);
    const ReceivedSeries y_ref = sample_outputs(chan_ref, ref_lambdas[m]);

    Rng chan_adapted = stream.stream(0);
    ReceivedSeries y_adapted = sample_outputs(chan_adapted, adapted_lambdas[m]);
    if (mode == EquivalenceMode::thinning) {
      Rng thin_stream = stream.stream(1);
      y_adapted = thin_receiver(thin_stream, *cert, y_adapted);
    }

    dec_ref[static_cast<std::size_t>(t)] =
        static_cast<std::uint32_t>(ml_decode(p_tilde, codebook_for_p_tilde, y_ref));
    dec_adapted[static_cast<std::size_t>(t)] =
        static_cast<std::uint32_t>(ml_decode(p_tilde, codebook_for_p_tilde, y_adapted));
    out_ref[static_cast<std::size_t>(t)] = y_ref;
    out_adapted[static_cast<std::size_t>(t)] = std::move(y_adapted);
  });

  EquivalenceReport rep;
  rep.trials = trials;
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    if (dec_ref[ts] != sent[ts]) ++rep.errors_ref;
    if (dec_adapted[ts] != sent[ts]) ++rep.errors_adapted;
    for (std::size_t i = 0; i < n; ++i) {
      ++hist_ref[i][static_cast<std::size_t>(std::min(out_ref[ts][i], hist_cap))];
      ++hist_adapted[i][static_cast<std::size_t>(std::min(out_adapted[ts][i], hist_cap))];
    }
  }
  rep.error_rate_ref = static_cast<double>(rep.errors_ref) / static_cast<double>(trials);
  rep.error_rate_adapted =
      static_cast<double>(rep.errors_adapted) / static_cast<double>(trials);

  rep.per_slot.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Chi2Result c = chi2_two_sample(hist_ref[i], hist_adapted[i]);
    rep.per_slot.push_back(c);
    rep.chi2_pooled += c.stat;
    rep.df_pooled += c.df;
  }
  rep.p_value_chi2 =
      rep.df_pooled > 0 ? gamma_q(0.5 * rep.df_pooled, 0.5 * rep.chi2_pooled) : 1.0;
  rep.z = two_proportion_z(rep.errors_ref, trials, rep.errors_adapted, trials);
  rep.pass = rep.p_value_chi2 > 0.01 && std::fabs(rep.z.z) <= 2.5758293035489004;

  std::uint64_t h = digest_pairs(sent, dec_ref);
  h = fnv1a64(dec_adapted.data(), dec_adapted.size() * sizeof(dec_adapted[0]), h);
  rep.outcome_digest = h;
  return rep;
}

AmsReport ams_empirical_check(const ProductionFunction& f, const ReleasePolicy& policy,
                              std::int64_t n, Rng& rng, double tol_tv, long max_iter) {
  if (n < 1) throw std::invalid_argument("ams_empirical_check: n must be >= 1");
  const BoundReport bound = policy_lower_bound(f, policy, /*p0=*/1.0, tol_tv, max_iter);

  const auto& grid = policy.state_grid;
  const auto& fracs = policy.release_fractions;
  const std::size_t ns = grid.size();
  const std::size_t na = fracs.size();

  AmsReport out;
  out.stationary = *bound.stationary;
  out.occupancy.assign(ns, 0.0);
  out.tv_trace.reserve(static_cast<std::size_t>(n));

  std::vector<std::int64_t> counts(ns, 0);
  std::size_t state = snap_down_index(grid, f.evaluate(0.0));
  for (std::int64_t k = 1; k <= n; ++k) {
    ++counts[state];
    double tv = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      tv += std::fabs(static_cast<double>(counts[s]) / static_cast<double>(k) -
                      out.stationary[s]);
    out.tv_trace.push_back(0.5 * tv);

    // Draw a release fraction from the policy row, then step the chain.
    const double u = rng.next_unit();
    double acc = 0.0;
    std::size_t a = na - 1;
    for (std::size_t j = 0; j < na; ++j) {
      acc += policy.prob(state, j);
      if (u < acc) {
        a = j;
        break;
      }
    }
    const double next = f.evaluate(grid[state] * (1.0 - fracs[a]));
    state = snap_down_index(grid, next);
  }
  for (std::size_t s = 0; s < ns; ++s)
    out.occupancy[s] = static_cast<double>(counts[s]) / static_cast<double>(n);
  return out;
}

ReleaseSequence random_feasible_sequence(const ProductionFunction& f, std::size_t len,
                                         Rng& rng) {
  ReleaseSequence x;
  x.reserve(len);
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double xi = rng.next_unit() * s;
    x.push_back(xi);
    s = f.evaluate(std::max(s - xi, 0.0));
  }
  return x;
}

DominationCertificate random_subunit_kernel(std::size_t len, Rng& rng) {
  std::vector<double> q(len);
  double total = 0.0;
  for (double& v : q) {
    v = rng.next_unit();
    total += v;
  }
  const double mass = rng.next_unit();
  DominationCertificate cert;
  if (total > 0) {
    for (double& v : q) v *= mass / total;
    cert.mass = mass;
  }
  cert.q = std::move(q);
  return cert;
}

LemmaSweepResult lemma_random_sweep(const ProductionFunction& f, std::int64_t trials,
                                    std::size_t xt_len, std::size_t q_len_max, const Rng& rng) {
  if (trials < 1) throw std::invalid_argument("lemma_random_sweep: trials must be >= 1");
  if (q_len_max < 1) throw std::invalid_argument("lemma_random_sweep: q_len_max must be >= 1");
  LemmaSweepResult out;
  out.trials = trials;
  out.concave = is_concave(f);
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(t));
    const std::size_t q_len = 1 + static_cast<std::size_t>(stream.next_below(q_len_max));
    const ReleaseSequence xt = random_feasible_sequence(f, xt_len, stream);
    const DominationCertificate q = random_subunit_kernel(q_len, stream);
    const LemmaCheck check = verify_lemma_a1(f, q, xt);
    bool bad = false;
    if (!check.feasible) {
      ++out.feasibility_violations;
      bad = true;
    }
    if (!check.strengthened_ok) {
      ++out.strengthened_violations;
      bad = true;
    }
    if (bad && !out.first_violation_trial) out.first_violation_trial = t;
  }
  return out;
}

}  // namespace molcap
