#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpi/interaction.hpp"
#include "bpi/rng.hpp"

namespace bpi {

/// Values on the uniform grid t_k = k * dt, k = 0..n.
struct Trajectory {
  double dt = 1e-3;
  std::vector<double> values;
  std::optional<double> absorbed_at;  // first grid time with value 0
  bool capped = false;                // left the finite range and was stopped

  double t_max() const { return values.empty() ? 0.0 : dt * static_cast<double>(values.size() - 1); }
  double final_value() const { return values.empty() ? 0.0 : values.back(); }
  /// Linear interpolation; constant beyond the last grid point.
  double value_at(double t) const;

  static Trajectory constant(double value, double t_max, double dt);
};

/// Number of Euler steps covering [0, t_max] with step dt.
std::size_t step_count(double t_max, double dt);

/// Full-truncation Euler scheme for dZ = f(Z) dt + 2 sqrt(Z) dW.
Trajectory solve_feller(const InteractionFunction& f, double x, double t_max, double dt, Engine& rng);
Trajectory solve_feller(const InteractionFunction& f, double x, double t_max, double dt, std::uint64_t seed);

struct CoupledTrajectories {
  Trajectory lower;      // Z^x
  Trajectory increment;  // V^{x,y}
};

/// Z^x with its own noise and V^{x,y} with drift f(Z+V) - f(Z) driven by an
/// independent stream. With a seed, Z^x equals solve_feller for that seed.
CoupledTrajectories solve_coupled(const InteractionFunction& f, double x, double y, double t_max, double dt,
                                  Engine& rng_lower, Engine& rng_increment);
CoupledTrajectories solve_coupled(const InteractionFunction& f, double x, double y, double t_max, double dt,
                                  std::uint64_t seed);

/// dZ = [f(Z + z(t)) - f(z(t))] dt + 2 sqrt(Z) dW in the environment z.
/// The environment is resampled by interpolation when its grid differs;
/// GridMismatch when it does not cover [0, t_max].
Trajectory solve_environment(const InteractionFunction& f, double x, const Trajectory& env, double t_max, double dt,
                             Engine& rng);
Trajectory solve_environment(const InteractionFunction& f, double x, const Trajectory& env, double t_max, double dt,
                             std::uint64_t seed);

/// Samples of Z^x_t over `replicates` independent streams (tag, index).
std::vector<double> feller_marginal(const InteractionFunction& f, double x, double t, double dt,
                                    std::size_t replicates, std::uint64_t master_seed, unsigned threads = 1,
                                    const std::string& tag = "feller");

std::vector<double> environment_marginal(const InteractionFunction& f, double x, const Trajectory& env, double t,
                                         double dt, std::size_t replicates, std::uint64_t master_seed,
                                         unsigned threads = 1, const std::string& tag = "environment");

struct Proportion {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double standard_error = 0.0;
  std::size_t successes = 0;
  std::size_t trials = 0;
};

/// Wilson 95% interval.
Proportion binomial_proportion(std::size_t successes, std::size_t trials);

struct FirstHitReport {
  Proportion hit_lower_first;  // P(T_a < T_b) among terminated runs
  std::size_t non_terminated = 0;
  std::string warning;
};

/// Runs until the path leaves (a, b) on the grid or t_cap elapses.
FirstHitReport first_hit(const InteractionFunction& f, double x, double a, double b, double dt,
                         std::size_t replicates, std::uint64_t master_seed, double t_cap = 100.0,
                         unsigned threads = 1);

struct ExtinctionReport {
  Proportion extinct;
  double mean_total_mass = 0.0;  // over extinct paths, trapezoidal
  std::vector<double> total_masses;
  std::vector<double> extinction_times;
  std::string warning;
};

ExtinctionReport extinction_stats(const InteractionFunction& f, double x, double t_cap, double dt,
                                  std::size_t replicates, std::uint64_t master_seed, unsigned threads = 1);

}  // namespace bpi
