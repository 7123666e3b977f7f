#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bpi/diffusion.hpp"
#include "bpi/interaction.hpp"
#include "bpi/rng.hpp"

namespace bpi {

struct RKParams {
  InteractionFunction f = InteractionFunction::zero();
  std::vector<double> x_targets{1.0};
  std::optional<Trajectory> env;   // z(level); absent means z = 0
  std::optional<double> ceiling;   // reflect at K as well as at 0
  double ds = 1e-4;
  double dh = 0.02;
  double s_cap = 0.0;              // <= 0: 10^6 steps per target
  double calibration = 2.0;        // L(0) = calibration * sum of folds at 0
  int noise_substeps = 1;          // each increment sums this many unit normals
  bool record_path = false;

  void validate() const;
  double effective_s_cap() const;
};

/// Occupation density on the cells [j dh, (j+1) dh).
struct LocalTimeField {
  double dh = 0.02;
  std::vector<double> accumulated;
  double zero_local_time = 0.0;

  double level(std::size_t j) const { return dh * static_cast<double>(j); }
  /// Density at level t, interpolated between cell centres.
  double value_at(double t) const;
  /// sum_j accumulated_j * dh
  double total_mass() const;
};

struct ReflectedRun {
  std::vector<LocalTimeField> snapshots;  // one per reached target
  std::vector<double> s_values;           // S_x per target (NaN if unreached)
  std::vector<bool> truncated;            // per target
  std::vector<double> path;               // H_k when record_path
  double ds = 0.0;
  std::uint64_t steps = 0;
  double fold_at_zero = 0.0;
  double fold_at_ceiling = 0.0;

  bool complete() const;
};

/// Mirror-reflected Euler scheme for
///   dH = 1/2 f'(z(H) + L(H)) ds + dB, reflected at 0 (and K),
/// stopped once the local time at 0 exceeds the largest target.
/// Without a ceiling the interaction must classify as subcritical.
ReflectedRun simulate_reflected(const RKParams& params, Engine& rng);
ReflectedRun simulate_reflected(const RKParams& params, std::uint64_t seed);

struct CalibrationReport {
  double constant = 2.0;
  double standard_error = 0.0;
  std::size_t replicates = 0;
};

/// Ratio of the occupation density at 0+ to the summed folds, measured on
/// drift-free runs reflected in [0, 1].
CalibrationReport calibrate_zero_local_time(double ds, double dh, double run_time, std::size_t replicates,
                                            std::uint64_t master_seed, unsigned threads = 1,
                                            int noise_substeps = 1);

struct RKEnsemble {
  std::vector<ReflectedRun> runs;
  std::size_t truncated_runs = 0;

  /// L_{S_x}(t) over completed runs for target index i.
  std::vector<double> field_samples(std::size_t target, double level) const;
  std::vector<double> s_samples(std::size_t target) const;
};

RKEnsemble ray_knight_field(const RKParams& params, std::size_t replicates, std::uint64_t master_seed,
                            unsigned threads = 1);

/// |S_x - sum_j L_{S_x}(t_j) dh| / S_x
double total_mass_identity(const LocalTimeField& field, double s_x);

/// Keeps the samples below level a and closes the gaps.
std::vector<double> excursion_projection(const std::vector<double>& path, double a, double b);

}  // namespace bpi
