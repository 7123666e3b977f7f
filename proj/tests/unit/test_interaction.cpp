#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpi/errors.hpp"
#include "bpi/interaction.hpp"
#include "bpi/quadrature.hpp"

using namespace bpi;

TEST_SUITE("interaction") {

TEST_CASE("evaluation") {
  CHECK(InteractionFunction::logistic(1, 1)(0.0) == 0.0);
  CHECK(InteractionFunction::logistic(2, 1)(2.0) == 0.0);
  CHECK(InteractionFunction::linear(3)(1.5) == doctest::Approx(4.5));
  CHECK_THROWS_AS(InteractionFunction::linear(1)(-0.1), std::domain_error);
}

TEST_CASE("custom tables interpolate linearly and stay in their domain") {
  const auto f = InteractionFunction::custom(0.5, {0.0, 1.0, 0.0});
  CHECK(f(0.25) == doctest::Approx(0.5));
  CHECK(f(0.75) == doctest::Approx(0.5));
  CHECK(f.domain_max() == doctest::Approx(1.0));
  CHECK_THROWS(f(1.5));
  CHECK_THROWS_AS(InteractionFunction::custom(0.5, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("hypotheses") {
  SUBCASE("logistic") {
    const HypothesisReport r = validate_hypotheses(InteractionFunction::logistic(1, 1), 10.0, 0.01);
    CHECK(r.a);
    CHECK(r.beta_witness <= 1.0);
  }
  SUBCASE("linear") {
    const HypothesisReport r = validate_hypotheses(InteractionFunction::linear(3), 10.0, 0.01);
    CHECK(r.a);
    CHECK(r.b);
    CHECK(r.beta_witness == doctest::Approx(3.0));
  }
  SUBCASE("z squared has unbounded increments") {
    std::vector<double> t;
    for (int i = 0; i <= 100; ++i) t.push_back(0.01 * i * i);
    const auto f = InteractionFunction::custom(0.1, t, 1.0).with_derivative(DerivativeMode::CentralDifference, 1e-4);
    CHECK_FALSE(validate_hypotheses(f, 10.0, 0.1).a);
  }
}

TEST_CASE("scale function") {
  const auto zero = InteractionFunction::zero();
  CHECK(scale_function(zero, 3.0) == doctest::Approx(2.0));
  CHECK(scale_function(InteractionFunction::logistic(1, 1), 1.0) == 0.0);
  CHECK(scale_function(InteractionFunction::linear(2), 5.0) == doctest::Approx(1.0 - std::exp(-4.0)).epsilon(1e-7));

  // independent oracle: plain adaptive Simpson on the closed-form inner integral
  const auto f = InteractionFunction::logistic(2, 1);
  const double direct = adaptive_simpson(
      [](double u) { return std::exp(-0.5 * (2.0 * (u - 1.0) - 0.5 * (u * u - 1.0))); }, 1.0, 2.5, 1e-12);
  CHECK(scale_function(f, 2.5) == doctest::Approx(direct).epsilon(1e-7));

  double prev = scale_function(f, 0.05);
  for (double z = 0.1; z < 6.0; z += 0.1) {
    const double s = scale_function(f, z);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("classification") {
  CHECK(classify(InteractionFunction::logistic(1, 1)).classification == Criticality::Subcritical);
  CHECK(classify(InteractionFunction::zero()).classification == Criticality::Subcritical);
  const ScaleReport r = classify(InteractionFunction::linear(3));
  CHECK(r.classification == Criticality::Supercritical);
  CHECK_FALSE(r.lambda_infinite);
}

TEST_CASE("hitting probability") {
  const auto zero = InteractionFunction::zero();
  CHECK(hitting_probability(zero, 1.0, 0.0, 2.0) == doctest::Approx(0.5));
  CHECK(hitting_probability(zero, 1.5, 1.0, 3.0) == doctest::Approx(0.75));
  const double p = hitting_probability(InteractionFunction::logistic(2, 1), 1.0, 0.5, 2.0);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

}
