#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace bpi {

enum class InteractionKind { Logistic, Linear, Custom };
enum class DerivativeMode { Analytic, CentralDifference, None };

/// The interaction drift f of the population model together with the
/// constant beta bounding its increments (f(x+y) - f(x) <= beta * y).
///
/// Logistic is f(z) = theta z - gamma z^2, Linear is f(z) = theta z, and
/// Custom is a table on a uniform grid starting at 0, linearly interpolated.
/// Instances are immutable after construction.
class InteractionFunction {
 public:
  static InteractionFunction logistic(double theta, double gamma);
  static InteractionFunction linear(double theta);
  /// `values[i]` is f(i * step); values[0] must be exactly 0. Custom tables
  /// carry no implied beta: pass the constant the table is meant to satisfy.
  static InteractionFunction custom(double step, std::vector<double> values, double beta = 0.0);
  /// Two-column CSV (z, f(z)) with a uniform z grid starting at 0. A header
  /// line is allowed.
  static InteractionFunction from_csv(const std::filesystem::path& path, double beta = 0.0);
  static InteractionFunction zero() { return logistic(0.0, 0.0); }

  InteractionFunction with_beta(double beta) const;
  /// Switches derivative evaluation; CentralDifference needs h > 0.
  InteractionFunction with_derivative(DerivativeMode mode, double h = 1e-6) const;

  /// f(z). Throws std::domain_error for z < 0 or z beyond a Custom table.
  double operator()(double z) const;
  double evaluate(double z) const { return (*this)(z); }
  /// f'(z). Throws DerivativeUnavailable when the mode is None.
  double derivative(double z) const;
  bool has_derivative() const { return mode_ != DerivativeMode::None; }

  InteractionKind kind() const { return kind_; }
  DerivativeMode derivative_mode() const { return mode_; }
  double theta() const { return theta_; }
  double gamma() const { return gamma_; }
  double beta() const { return beta_; }
  double difference_step() const { return h_; }
  /// Largest admissible argument (infinity unless Custom).
  double domain_max() const;
  const std::vector<double>& table() const { return table_; }
  double table_step() const { return table_step_; }

  std::string describe() const;

 private:
  InteractionFunction() = default;

  InteractionKind kind_ = InteractionKind::Logistic;
  DerivativeMode mode_ = DerivativeMode::Analytic;
  double theta_ = 0.0;
  double gamma_ = 0.0;
  double beta_ = 0.0;
  double h_ = 1e-6;
  double table_step_ = 0.0;
  std::vector<double> table_;
};

struct HypothesisReport {
  bool a = false;  // increment bound on the grid, with f(0) = 0
  bool b = false;  // f' <= beta on the grid
  double beta_witness = 0.0;
};

/// Grid certification of the increment and derivative bounds on
/// [0, grid_max]. Failures are reported, never thrown.
HypothesisReport validate_hypotheses(const InteractionFunction& f, double grid_max, double grid_step);

/// S(z) = int_1^z exp(-1/2 int_1^u f(r)/r dr) du.
double scale_function(const InteractionFunction& f, double z);

/// P(T_a < T_b) for the diffusion started at x, 0 <= a < x < b.
double hitting_probability(const InteractionFunction& f, double x, double a, double b);

enum class Criticality { Subcritical, Supercritical, Inconclusive };

std::string to_string(Criticality c);

struct ScaleReport {
  double lambda_estimate = 0.0;  // +inf when the integral was declared divergent
  bool lambda_infinite = false;
  Criticality classification = Criticality::Inconclusive;
  double upper_limit_used = 0.0;
  double quadrature_tolerance = 0.0;
  std::string rule;  // which test decided
};

/// Extinction criterion: subcritical iff Lambda(f) = int_1^inf S'(u) du is
/// infinite. Tries the pointwise sufficient conditions on f first, then a
/// numerical divergence test of the partial integral up to `tail_limit`.
ScaleReport classify(const InteractionFunction& f, double tail_limit = 100.0, double tolerance = 1e-6);

}  // namespace bpi
