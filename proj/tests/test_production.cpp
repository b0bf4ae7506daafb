#include <cmath>
#include <limits>

#include "doctest.h"
#include "molcap/production.hpp"
#include "molcap/rng.hpp"

using namespace molcap;

namespace {

// Independent oracle: literal fixed-point iteration of f from the empty
// state, with the same divergence cutoff the library documents.
double iterate_phi_oracle(const ProductionFunction& f, double tol = 1e-12,
                          long max_iter = 1000000) {
  double s = 0.0;
  for (long i = 0; i < max_iter; ++i) {
    const double next = f.evaluate(s);
    if (next < s - 1e-12) throw ModelError("oracle: non-monotone iterate");
    if (next > kDivergenceThreshold) return std::numeric_limits<double>::infinity();
    if (next - s <= tol) return next;
    s = next;
  }
  return s;
}

// Independent oracle: dense scan of f(s) - s.
double delta_u_oracle(const ProductionFunction& f, double hi, int n = 200000) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double s = hi * static_cast<double>(i) / n;
    best = std::max(best, f.evaluate(s) - s);
  }
  return best;
}

}  // namespace

TEST_CASE("eval_f on the stock families") {
  const auto capped = ProductionFunction::affine_capped(2, 10);
  CHECK(eval_f(capped, 5) == doctest::Approx(7).epsilon(1e-15));
  CHECK(eval_f(capped, 9) == doctest::Approx(10).epsilon(1e-15));

  const auto sqrt2 = ProductionFunction::sqrt_offset(2);
  // Frozen from the closed form sqrt(2).
  CHECK(eval_f(sqrt2, 0) == doctest::Approx(1.4142135623730951).epsilon(1e-15));

  CHECK_THROWS_AS(eval_f(capped, -1), std::domain_error);
}

TEST_CASE("eval_f clamps inputs beyond the saturation level") {
  const auto sqrt2 = ProductionFunction::sqrt_offset(2);  // phi = 2
  CHECK(eval_f(sqrt2, 5) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("construction invariants") {
  CHECK_THROWS_AS(ProductionFunction::affine(-1), std::invalid_argument);
  CHECK_THROWS_AS(ProductionFunction::sqrt_offset(0), std::invalid_argument);
  CHECK_THROWS_AS(ProductionFunction::piecewise_linear({{0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(ProductionFunction::piecewise_linear({{1, 2}, {2, 3}}),
                  std::invalid_argument);  // must start at 0
  CHECK_THROWS_AS(ProductionFunction::piecewise_linear({{0, 1}, {1, 0.5}}),
                  std::invalid_argument);  // f below s at a knot
  CHECK_THROWS_AS(ProductionFunction::piecewise_linear({{0, 2}, {0, 3}}),
                  std::invalid_argument);  // knots not increasing
}

TEST_CASE("compute_phi fixed points") {
  CHECK(compute_phi(ProductionFunction::affine_capped(2, 10)) == doctest::Approx(10));
  CHECK(std::isinf(compute_phi(ProductionFunction::affine(1))));
  CHECK(compute_phi(ProductionFunction::affine(0)) == doctest::Approx(0));

  // Oracle iteration converges to the closed-form fixed point.
  const auto sqrt2 = ProductionFunction::sqrt_offset(2);
  const double phi = compute_phi(sqrt2);
  CHECK(phi == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(iterate_phi_oracle(sqrt2) == doctest::Approx(phi).epsilon(1e-9));
  CHECK(std::fabs(sqrt2.evaluate(phi) - phi) <= 1e-9);

  // Divergence detected by the oracle as well for fast-growing production.
  const auto fast = ProductionFunction::affine(2000);
  CHECK(std::isinf(compute_phi(fast)));
  CHECK(std::isinf(iterate_phi_oracle(fast)));
}

TEST_CASE("compute_phi piecewise linear crossings") {
  // f interpolates (0,1) -> (4,4): fixed point where f crosses the identity.
  const auto pl = ProductionFunction::piecewise_linear({{0, 1}, {4, 4}, {6, 4}});
  const double phi = compute_phi(pl);
  CHECK(phi == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(iterate_phi_oracle(pl, 1e-13) == doctest::Approx(4.0).epsilon(1e-6));

  // Tail slope 1 with positive production never crosses the identity.
  const auto grow = ProductionFunction::piecewise_linear({{0, 1}, {1, 2}});
  CHECK(std::isinf(compute_phi(grow)));
}

TEST_CASE("delta_u exact and by refinement") {
  CHECK(delta_u(ProductionFunction::affine(3), compute_phi(ProductionFunction::affine(3))) ==
        doctest::Approx(3));
  const auto capped = ProductionFunction::affine_capped(2, 10);
  CHECK(delta_u(capped, compute_phi(capped)) == doctest::Approx(2));

  const auto sqrt2 = ProductionFunction::sqrt_offset(2);
  const double phi = compute_phi(sqrt2);
  const double du = delta_u(sqrt2, phi);
  // sqrt(s + 2) - s is decreasing on [0, 2]; the oracle scan peaks at 0.
  CHECK(du == doctest::Approx(1.4142135623730951).epsilon(1e-9));
  CHECK(du == doctest::Approx(delta_u_oracle(sqrt2, phi)).epsilon(1e-9));

  // Interior maximum: for small offsets the peak of sqrt(s+c) - s moves to
  // s = 1/4 - c with value c + 1/4.
  const auto interior = ProductionFunction::sqrt_offset(0.1);
  const double phi_i = compute_phi(interior);
  CHECK(delta_u(interior, phi_i) == doctest::Approx(0.35).epsilon(1e-9));
  CHECK(delta_u(interior, phi_i) == doctest::Approx(delta_u_oracle(interior, phi_i)).epsilon(1e-9));
}

TEST_CASE("delta_l tail production") {
  CHECK(delta_l(ProductionFunction::affine(1)) == doctest::Approx(1));
  CHECK(delta_l(ProductionFunction::affine(0.5)) == doctest::Approx(0.5));
  CHECK(delta_l(ProductionFunction::affine(0)) == doctest::Approx(0));
  CHECK_THROWS_AS(delta_l(ProductionFunction::affine_capped(2, 10)), PreconditionError);
  CHECK_THROWS_AS(delta_l(ProductionFunction::sqrt_offset(2)), PreconditionError);

  // Knots sampled from f(s) - s = 2 + 1/(1+s) on a geometric s ladder; the
  // probe grid should land near the tail value 2.
  std::vector<Knot> knots;
  double s = 0.0;
  for (int i = 0; i < 40; ++i) {
    knots.push_back({s, s + 2.0 + 1.0 / (1.0 + s)});
    s = s == 0.0 ? 1.0 : s * 2.0;
  }
  const auto pl = ProductionFunction::piecewise_linear(std::move(knots));
  REQUIRE(std::isinf(compute_phi(pl)));
  CHECK(delta_l(pl) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("step_state") {
  CHECK(step_state(ProductionFunction::affine_capped(2, 10), 5, 3) == doctest::Approx(4));
  CHECK(step_state(ProductionFunction::affine(1), 0, 0) == doctest::Approx(1));
  CHECK(step_state(ProductionFunction::sqrt_offset(2), 2, 2) ==
        doctest::Approx(1.4142135623730951));
  CHECK_THROWS_AS(step_state(ProductionFunction::affine(1), 1, 2), FeasibilityError);
  CHECK_THROWS_AS(step_state(ProductionFunction::affine(1), 1, -0.5), std::domain_error);
}

TEST_CASE("check_feasible traces") {
  const auto affine1 = ProductionFunction::affine(1);
  const auto t1 = check_feasible(affine1, {0, 1, 1});
  CHECK(t1.ok);
  CHECK(t1.s_trace == std::vector<double>{0, 1, 1});

  const auto t2 = check_feasible(affine1, {1});
  CHECK_FALSE(t2.ok);
  REQUIRE(t2.first_violation.has_value());
  CHECK(*t2.first_violation == 0);

  const auto capped = ProductionFunction::affine_capped(2, 10);
  const auto t3 = check_feasible(capped, {0, 0, 0, 6});
  CHECK(t3.ok);
  CHECK(t3.s_trace == std::vector<double>{0, 2, 4, 6});
}

TEST_CASE("is_concave per family") {
  CHECK(is_concave(ProductionFunction::affine_capped(2, 10)));
  CHECK(is_concave(ProductionFunction::sqrt_offset(2)));
  CHECK(is_concave(ProductionFunction::affine(1)));
  CHECK(is_concave(ProductionFunction::piecewise_linear({{0, 1}, {1, 2}, {2, 2.5}})));
  CHECK_FALSE(is_concave(ProductionFunction::piecewise_linear({{0, 0.5}, {1, 1.5}, {2, 3.5}})));
}

TEST_CASE("idle trace grows into the saturation level") {
  // Property: with no releases the storage trace is non-decreasing, stays in
  // [0, phi], and passes any target below phi in finite time.
  const ProductionFunction cases[] = {
      ProductionFunction::affine_capped(0.37, 4.2),
      ProductionFunction::sqrt_offset(1.3),
      ProductionFunction::piecewise_linear({{0, 0.8}, {2, 2.4}, {3, 3.0}, {9, 9.0}}),
  };
  for (const auto& f : cases) {
    const double phi = compute_phi(f);
    REQUIRE(std::isfinite(phi));
    const auto trace = check_feasible(f, ReleaseSequence(4000, 0.0));
    CHECK(trace.ok);
    double prev = -1;
    bool reached = false;
    for (double s : trace.s_trace) {
      CHECK(s >= prev);
      CHECK(s <= phi + 1e-9);
      if (s >= 0.99 * phi) reached = true;
      prev = s;
    }
    CHECK(reached);
  }
  // Unbounded case: the affine trace passes any fixed target.
  const auto trace = check_feasible(ProductionFunction::affine(1), ReleaseSequence(12, 0.0));
  CHECK(trace.s_trace.back() >= 10);
}

TEST_CASE("storage traces stay within bounds for random feasible releases") {
  Rng rng(20240811);
  const ProductionFunction cases[] = {
      ProductionFunction::affine(0.7),
      ProductionFunction::affine_capped(1.3, 6.0),
      ProductionFunction::sqrt_offset(2.2),
  };
  for (const auto& f : cases) {
    const double phi = compute_phi(f);
    for (int trial = 0; trial < 50; ++trial) {
      Rng stream = rng.stream(static_cast<std::uint64_t>(trial));
      ReleaseSequence x;
      double s = 0;
      for (int i = 0; i < 60; ++i) {
        const double xi = stream.next_unit() * s;
        x.push_back(xi);
        s = f.evaluate(s - xi);
      }
      const auto trace = check_feasible(f, x);
      CHECK(trace.ok);
      for (double lvl : trace.s_trace) {
        CHECK(lvl >= -1e-12);
        CHECK(lvl <= phi + 1e-9);
      }
    }
  }
}

TEST_CASE("step_state is monotone in the starting level") {
  Rng rng(77);
  const auto f = ProductionFunction::sqrt_offset(1.7);
  const double phi = compute_phi(f);
  for (int i = 0; i < 200; ++i) {
    double a = rng.next_unit() * phi;
    double b = rng.next_unit() * phi;
    if (a < b) std::swap(a, b);
    const double x = rng.next_unit() * b;  // legal for both
    CHECK(step_state(f, a, x) >= step_state(f, b, x) - 1e-12);
  }
}

TEST_CASE("constant production ties the two production rates") {
  for (double v : {0.25, 1.0, 3.5}) {
    const auto f = ProductionFunction::affine(v);
    CHECK(delta_u(f, compute_phi(f)) == doctest::Approx(v));
    CHECK(delta_l(f) == doctest::Approx(v));
  }
}
