#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpi/discrete.hpp"
#include "bpi/rng.hpp"

namespace bpi {

/// Planar position of an individual. Root j has key (j); the c-th daughter
/// (c = 1, 2, ...) of an individual with key K has key K ++ (-c). Keys
/// compare lexicographically, a proper prefix being smaller, which places
/// every daughter right of her mother and younger sisters left of older ones.
using PlanarKey = std::vector<std::int32_t>;

std::string key_to_string(const PlanarKey& key);

struct Individual {
  std::int64_t id = 0;
  std::int64_t parent = -1;  // -1 for roots
  double birth = 0.0;
  double death = 0.0;
  PlanarKey key;
  bool censored = false;  // still alive at the end of the simulated window
};

struct PlanarForest {
  std::vector<Individual> individuals;  // ids equal indices
  std::int64_t ancestor_count = 0;
  std::int64_t scale = 1;  // mass per individual is 1/scale
  double t_end = 0.0;
  bool truncated = false;  // event cap reached

  std::size_t size() const { return individuals.size(); }
  /// Children of every individual in planar (left-to-right) order.
  std::vector<std::vector<std::int64_t>> children() const;
  /// Individuals in planar order.
  std::vector<std::int64_t> planar_order() const;
  /// Alive individuals at time t, birth <= t < death.
  std::int64_t alive_at(double t) const;
  double total_branch_length() const;
};

/// Individual-based simulation. The individual at left-rank r (1-based)
/// among the living carries rates lambda + (N df_r)^+ and mu + (N df_r)^-.
/// Individuals alive at the end of the window are censored there.
PlanarForest grow_forest(const DiscreteParams& params, Engine& rng);
PlanarForest grow_forest(const DiscreteParams& params, std::uint64_t seed);

/// Total population count read off a forest, as a step path.
StepPath population_path(const PlanarForest& forest);

struct Vertex {
  double s = 0.0;
  double h = 0.0;
};

/// Continuous piecewise-linear path with slopes +-p.
struct PolyPath {
  std::vector<Vertex> vertices;
  double slope = 2.0;

  double duration() const { return vertices.empty() ? 0.0 : vertices.back().s; }
  double max_height() const;
  std::size_t local_maxima() const;
  std::size_t local_minima() const;
  double height_at(double s) const;
};

/// Depth-first left-to-right contour of the forest at slope p.
PolyPath explore(const PlanarForest& forest, double p = 2.0);

enum class LocalTimeNormalization { Raw, HalfP };

struct LocalTimeProfile {
  std::vector<double> levels;
  std::vector<double> values;
  LocalTimeNormalization normalization = LocalTimeNormalization::Raw;
};

/// Number of passages of the path through each level before time s. A
/// segment passes level t > 0 when min < t <= max; level 0 is read as 0+.
/// Levels must be sorted increasingly.
std::vector<std::int64_t> crossing_counts(const PolyPath& path, double s, const std::vector<double>& levels);

/// Exact local time: crossings / p (or crossings / 2 with HalfP).
LocalTimeProfile local_time(const PolyPath& path, double s, const std::vector<double>& levels,
                            LocalTimeNormalization normalization = LocalTimeNormalization::Raw);

struct RayKnightReport {
  double max_discrepancy = 0.0;
  std::size_t levels_checked = 0;
};

/// Compares the alive count with (p/2) L_S(t) at every midpoint between
/// consecutive event heights.
RayKnightReport discrete_ray_knight_check(const PlanarForest& forest, double p = 2.0);

}  // namespace bpi
