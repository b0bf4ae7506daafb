#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "molcap/production.hpp"
#include "molcap/types.hpp"

namespace molcap {

/// Discrete input distribution on a grid of release levels.
struct InputDistribution {
  std::vector<double> support;  // strictly increasing, >= 0
  std::vector<double> pmf;      // >= 0, sums to 1 within 1e-12

  InputDistribution() = default;
  InputDistribution(std::vector<double> support, std::vector<double> pmf);
};

enum class BoundKind { peak, avg, thm1_lower, thm1_upper, thm2_lower, thm3_lower };

const char* to_string(BoundKind k);
BoundKind bound_kind_from_string(const std::string& s);

/// One computed capacity bound plus solver diagnostics.
struct BoundReport {
  BoundKind kind = BoundKind::peak;
  double value_nats = 0;
  double constraint_c = 0;
  long iterations = 0;
  double final_gap = 0;
  bool truncation_warning = false;
  std::optional<InputDistribution> achieving;
  std::optional<std::vector<double>> stationary;  // policy-chain bounds only
};

struct SolverOptions {
  int grid_size = 256;
  double tol = 1e-6;        // Blahut-Arimoto optimality-gap certificate, nats
  long max_iter = 500000;   // per solver run
  double x_max = 0;         // 0 = auto: max(20 c, 10 / p0)
  double tail_mass = 1e-12;
};

/// Observer for solver iterations: (iteration, mutual information, gap, mean).
using BaObserver = std::function<void(long, double, double, double)>;

/// Exact plug-in mutual information I(X;Y) for Y ~ Poisson(p0 X), X ~ dist,
/// with outputs summed to the tail-mass truncation point. Nats.
double exact_mi(const InputDistribution& dist, double p0, double tail_mass = 1e-12);

/// Capacity of the memoryless Poisson channel under the peak constraint
/// X in [0, c], via Blahut-Arimoto on a uniform grid. The reported value is
/// the mutual information of the returned distribution, within `tol` of the
/// grid-restricted optimum (gap certificate in final_gap).
BoundReport ba_peak(double c, double p0, const SolverOptions& opts = {},
                    const BaObserver& observer = nullptr);

/// Capacity under the average constraint E[X] <= c, via Lagrangian
/// Blahut-Arimoto on a uniform grid over [0, x_max] with the multiplier
/// bisected until the optimizer's mean is within tol_c of c (feasible side).
BoundReport ba_avg(double c, double p0, const SolverOptions& opts = {},
                   const BaObserver& observer = nullptr);

/// Capacity sandwich driven by the peak per-slot production: lower bound
/// ba_peak(delta_u), upper bound ba_avg(delta_u).
struct SandwichBounds {
  BoundReport lower;  // thm1_lower
  BoundReport upper;  // thm1_upper
};
SandwichBounds production_bounds(const ProductionFunction& f, double p0,
                                 const SolverOptions& opts = {});

/// Lower bound for an unbounded reservoir driven by the tail production
/// rate: ba_avg(delta_l). Requires compute_phi(f) infinite.
BoundReport unbounded_lower_bound(const ProductionFunction& f, double p0,
                                  const SolverOptions& opts = {});

/// Stationary release policy on a discretized storage grid: a conditional
/// pmf over release fractions (X = fraction * S) per storage level.
struct ReleasePolicy {
  std::vector<double> state_grid;          // increasing, within [f(0), phi]
  std::vector<double> release_fractions;   // increasing, within [0, 1]
  std::vector<double> cond_pmf;            // rows (state) x cols (fraction), row-major

  double prob(std::size_t state, std::size_t fraction) const {
    return cond_pmf[state * release_fractions.size() + fraction];
  }
  void validate() const;

  static ReleasePolicy full_release(std::vector<double> grid);
  static ReleasePolicy on_off(std::vector<double> grid, double release_prob);
  static ReleasePolicy uniform(std::vector<double> grid, std::vector<double> fractions);
};

/// Uniform storage grid spanning [f(0), phi]; requires finite phi.
std::vector<double> make_state_grid(const ProductionFunction& f, int size);

/// Index of the largest grid value not exceeding v (within a relative snap
/// tolerance for exact hits). Grid must be non-empty and increasing.
std::size_t snap_down_index(const std::vector<double>& grid, double v);

/// Capacity lower bound of a stationary policy: power-iterates the induced
/// storage chain to its stationary distribution (total-variation stopping
/// rule), then evaluates I(X;Y|S) exactly on the grid. Throws SolverError if
/// the chain does not converge within max_iter steps.
BoundReport policy_lower_bound(const ProductionFunction& f, const ReleasePolicy& policy,
                               double p0, double tol_tv = 1e-10, long max_iter = 1000000,
                               double tail_mass = 1e-12);

}  // namespace molcap
