#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bpi/analysis.hpp"
#include "bpi/errors.hpp"
#include "bpi/rng.hpp"

using namespace bpi;

TEST_SUITE("analysis") {

TEST_CASE("ks examples") {
  CHECK(ks_two_sample(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(ks_two_sample(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1}) == 1.0);
  CHECK(ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{1.5, 2.5}) == doctest::Approx(0.5));
  CHECK(ks_two_sample(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, std::vector<double>{1}), EmptySample);
}

TEST_CASE("ks matches brute-force enumeration, is symmetric and rank based") {
  Engine rng(1);
  std::uniform_int_distribution<int> d(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(1 + trial % 13);
    std::vector<double> b(1 + trial % 7);
    for (double& v : a) v = d(rng);
    for (double& v : b) v = d(rng);
    double brute = 0.0;
    for (int x = -1; x <= 10; ++x) {
      double fa = 0.0;
      double fb = 0.0;
      for (double v : a) fa += v <= x;
      for (double v : b) fb += v <= x;
      brute = std::max(brute, std::abs(fa / a.size() - fb / b.size()));
    }
    CHECK(ks_two_sample(a, b) == doctest::Approx(brute));
    CHECK(ks_two_sample(a, b) == ks_two_sample(b, a));
    std::vector<double> ea(a);
    std::vector<double> eb(b);
    for (double& v : ea) v = std::exp(v);
    for (double& v : eb) v = std::exp(v);
    CHECK(ks_two_sample(ea, eb) == ks_two_sample(a, b));
  }
}

TEST_CASE("moments") {
  const MomentReport a = moment_report(std::vector<double>{1, 1, 1, 1});
  CHECK(a.mean == 1.0);
  CHECK(a.variance == 0.0);
  const MomentReport b = moment_report(std::vector<double>{0, 2});
  CHECK(b.mean == 1.0);
  CHECK(b.variance == 2.0);
  CHECK_THROWS_AS(moment_report(std::vector<double>{1}), EmptySample);

  Engine rng = make_stream(2, "normal", 0);
  std::normal_distribution<double> n;
  std::vector<double> x(10000);
  for (double& v : x) v = n(rng);
  const MomentReport m = moment_report(x);
  CHECK(std::abs(m.mean) < 3.0 * m.standard_error);
  CHECK(m.ci_low < m.mean);
  CHECK(m.ci_high > m.mean);
}

TEST_CASE("compare") {
  const ComparisonReport r = compare(SampleSet({1, 2, 3}), SampleSet({1, 2, 3}), 0.1);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(compare(SampleSet({0, 0}), SampleSet({1, 1}), 0.5).verdict == Verdict::Fail);
}

TEST_CASE("convergence table") {
  const ConvergenceTable t =
      convergence_experiment(InteractionFunction::zero(), 1.0, 1.0, {1, 5, 20}, 1e-2, 300, 3);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].N == 1);
  CHECK(t.limit_samples.size() == 300);
  for (const auto& r : t.rows) CHECK(r.ks_vs_limit >= 0.0);
  CHECK_THROWS_AS(convergence_experiment(InteractionFunction::zero(), 1.0, 1.0, {5, 5}, 1e-2, 10, 3), std::invalid_argument);
}

TEST_CASE("streams do not depend on scheduling") {
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
}

}
