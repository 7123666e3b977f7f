#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpi/analysis.hpp"
#include "bpi/diffusion.hpp"
#include "bpi/errors.hpp"

using namespace bpi;

TEST_SUITE("diffusion") {

TEST_CASE("grid") {
  CHECK(step_count(1.0, 1e-3) == 1000);
  CHECK(step_count(1.0, 0.3) == 4);
  const Trajectory c = Trajectory::constant(2.0, 1.0, 0.1);
  CHECK(c.values.size() == 11);
  CHECK(c.value_at(0.55) == 2.0);
}

TEST_CASE("zero start is absorbing") {
  const Trajectory t = solve_feller(InteractionFunction::logistic(1, 1), 0.0, 1.0, 1e-2, 1);
  for (double v : t.values) CHECK(v == 0.0);
  const Trajectory e = solve_environment(InteractionFunction::logistic(1, 1), 0.0, Trajectory::constant(1.0, 1.0, 1e-2),
                                         1.0, 1e-2, 1);
  CHECK(e.final_value() == 0.0);
}

TEST_CASE("paths stay nonnegative and stay at zero once there") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Trajectory t = solve_feller(InteractionFunction::logistic(1, 1), 0.2, 3.0, 1e-3, derive_seed(1, "nn", i));
    bool dead = false;
    for (double v : t.values) {
      CHECK(v >= 0.0);
      if (dead) CHECK(v == 0.0);
      dead = dead || v == 0.0;
    }
  }
}

TEST_CASE("critical mean") {
  const auto z = feller_marginal(InteractionFunction::zero(), 1.0, 1.0, 1e-3, 4000, 3);
  const MomentReport m = moment_report(z);
  CHECK(std::abs(m.mean - 1.0) < 3.0 * m.standard_error);
}

TEST_CASE("linear mean") {
  const auto z = feller_marginal(InteractionFunction::linear(0.5), 1.0, 1.0, 1e-3, 4000, 4);
  const MomentReport m = moment_report(z);
  // Euler bias on the mean is (1 + theta dt)^n vs e^theta, well under 1e-3 here
  CHECK(std::abs(m.mean - std::exp(0.5)) < 3.0 * m.standard_error + 1e-3);
}

TEST_CASE("empty environment reproduces the plain solver bit for bit") {
  const auto f = InteractionFunction::logistic(1, 1);
  const Trajectory a = solve_feller(f, 0.7, 2.0, 1e-3, 99);
  const Trajectory b = solve_environment(f, 0.7, Trajectory::constant(0.0, 2.0, 1e-3), 2.0, 1e-3, 99);
  CHECK(a.values == b.values);
}

TEST_CASE("environment must cover the horizon") {
  CHECK_THROWS_AS(solve_environment(InteractionFunction::zero(), 1.0, Trajectory::constant(0.0, 0.5, 1e-3), 1.0, 1e-3, 1),
                  GridMismatch);
}

TEST_CASE("environment of one lowers the logistic drift") {
  // drift f(Z+1) - f(1) = -Z - Z^2 sits below -Z; with shared noise the mean follows
  const auto f = InteractionFunction::logistic(1, 1);
  std::vector<double> a;
  std::vector<double> b;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const std::uint64_t seed = derive_seed(5, "cmp", i);
    a.push_back(solve_environment(f, 1.0, Trajectory::constant(1.0, 1.0, 1e-3), 1.0, 1e-3, seed).final_value());
    b.push_back(solve_feller(InteractionFunction::linear(-1.0), 1.0, 1.0, 1e-3, seed).final_value());
  }
  std::size_t above = 0;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += b[i] - a[i];
    if (a[i] > b[i] + 1e-9) ++above;
  }
  CHECK(diff > 0.0);
  CHECK(above <= a.size() / 100);
}

TEST_CASE("coupled solutions") {
  const auto f = InteractionFunction::logistic(1, 1);
  SUBCASE("equal starts") {
    const CoupledTrajectories c = solve_coupled(f, 0.5, 0.5, 1.0, 1e-3, 3);
    for (double v : c.increment.values) CHECK(v == 0.0);
  }
  SUBCASE("lower part matches the plain solver") {
    const CoupledTrajectories c = solve_coupled(f, 0.5, 1.0, 1.0, 1e-3, 3);
    CHECK(c.lower.values == solve_feller(f, 0.5, 1.0, 1e-3, 3).values);
  }
  SUBCASE("without interaction the increment is a fresh Feller diffusion") {
    const std::size_t n = 3000;
    std::vector<double> v;
    for (std::uint64_t i = 0; i < n; ++i)
      v.push_back(solve_coupled(InteractionFunction::zero(), 0.5, 1.0, 1.0, 1e-3, derive_seed(8, "v", i)).increment.final_value());
    const auto ref = feller_marginal(InteractionFunction::zero(), 0.5, 1.0, 1e-3, n, 8, 1, "fresh");
    CHECK(ks_two_sample(v, ref) < 1.95 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("wilson interval") {
  const Proportion p = binomial_proportion(50, 100);
  CHECK(p.estimate == 0.5);
  CHECK(p.ci_low < 0.5);
  CHECK(p.ci_high > 0.5);
  CHECK(p.ci_high - 0.5 == doctest::Approx(0.5 - p.ci_low));
  const Proportion z = binomial_proportion(0, 40);
  CHECK(z.ci_low == 0.0);
  CHECK(z.ci_high > 0.0);
}

TEST_CASE("first hit order") {
  const FirstHitReport r = first_hit(InteractionFunction::zero(), 1.5, 1.0, 3.0, 1e-3, 2000, 6);
  CHECK(r.non_terminated == 0);
  CHECK(std::abs(r.hit_lower_first.estimate - 0.75) < 3.0 * r.hit_lower_first.standard_error + 0.02);
}

TEST_CASE("extinction") {
  const ExtinctionReport zero = extinction_stats(InteractionFunction::logistic(1, 1), 0.0, 5.0, 1e-3, 20, 1);
  CHECK(zero.extinct.estimate == 1.0);
  CHECK(zero.mean_total_mass == 0.0);
  const ExtinctionReport sup = extinction_stats(InteractionFunction::linear(3), 1.0, 5.0, 1e-3, 200, 2);
  CHECK_FALSE(sup.warning.empty());
  CHECK(sup.extinct.estimate < 0.95);
}

}
