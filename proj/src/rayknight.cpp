#include "bpi/rayknight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bpi/errors.hpp"
#include "bpi/parallel.hpp"

namespace bpi {

void RKParams::validate() const {
  if (!(ds > 0.0)) throw std::invalid_argument("ds must be > 0");
  if (!(dh > 0.0)) throw std::invalid_argument("dh must be > 0");
  if (x_targets.empty()) throw std::invalid_argument("at least one target is required");
  for (std::size_t i = 0; i < x_targets.size(); ++i) {
    if (!(x_targets[i] > 0.0)) throw std::invalid_argument("targets must be > 0");
    if (i && !(x_targets[i] > x_targets[i - 1])) throw std::invalid_argument("targets must increase strictly");
  }
  if (ceiling && !(*ceiling > 0.0)) throw std::invalid_argument("ceiling must be > 0");
  if (!(calibration > 0.0)) throw std::invalid_argument("calibration must be > 0");
  if (noise_substeps < 1) throw std::invalid_argument("noise_substeps must be >= 1");
  if (!f.has_derivative()) throw DerivativeUnavailable("reflected scheme needs f'");
}

double RKParams::effective_s_cap() const {
  return s_cap > 0.0 ? s_cap : 1e6 * ds * static_cast<double>(x_targets.size());
}

double LocalTimeField::value_at(double t) const {
  if (accumulated.empty() || t < 0.0) return 0.0;
  const double pos = t / dh - 0.5;
  if (pos <= 0.0) return accumulated.front();
  const auto j = static_cast<std::size_t>(pos);
  if (j + 1 >= accumulated.size()) {
    // Past the last centre, fall off linearly to the top edge of the grid.
    if (j >= accumulated.size()) return 0.0;
    return accumulated[j] * std::max(0.0, 1.0 - (pos - static_cast<double>(j)));
  }
  const double w = pos - static_cast<double>(j);
  return accumulated[j] + w * (accumulated[j + 1] - accumulated[j]);
}

double LocalTimeField::total_mass() const {
  double s = 0.0;
  for (double a : accumulated) s += a;
  return s * dh;
}

bool ReflectedRun::complete() const {
  return std::none_of(truncated.begin(), truncated.end(), [](bool b) { return b; });
}

namespace {

void gate(const RKParams& params) {
  params.validate();
  if (!params.ceiling) {
    const ScaleReport report = classify(params.f);
    if (report.classification != Criticality::Subcritical)
      throw std::invalid_argument("runs without a ceiling need a subcritical interaction; got " +
                                  to_string(report.classification));
  }
}

ReflectedRun reflect(const RKParams& params, Engine& rng) {
  const double ds = params.ds;
  const double dh = params.dh;
  const double sqds = std::sqrt(ds);
  const double inv_dh = 1.0 / dh;
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(params.noise_substeps));
  const bool has_ceiling = params.ceiling.has_value();
  const double K = has_ceiling ? *params.ceiling : std::numeric_limits<double>::infinity();
  const auto max_steps = static_cast<std::uint64_t>(std::ceil(params.effective_s_cap() / ds));
  const std::size_t targets = params.x_targets.size();
  const InteractionFunction& f = params.f;
  const Trajectory* env = params.env ? &*params.env : nullptr;

  ReflectedRun run;
  run.ds = ds;
  run.s_values.assign(targets, std::numeric_limits<double>::quiet_NaN());
  run.truncated.assign(targets, false);

  // Raw occupation time per cell; densities are occupation / dh.
  std::vector<double> occ(has_ceiling ? static_cast<std::size_t>(std::ceil(K / dh)) : 64, 0.0);
  auto density_at = [&](double h) {
    const double pos = h * inv_dh - 0.5;
    if (pos <= 0.0) return occ[0] * inv_dh;
    const auto j = static_cast<std::size_t>(pos);
    if (j + 1 >= occ.size()) return j < occ.size() ? occ[j] * inv_dh : 0.0;
    const double w = pos - static_cast<double>(j);
    return (occ[j] + w * (occ[j + 1] - occ[j])) * inv_dh;
  };

  std::normal_distribution<double> normal;
  double h = 0.0;
  double fold = 0.0;
  double fold_top = 0.0;
  std::size_t next = 0;
  std::uint64_t steps = 0;
  while (next < targets) {
    if (steps >= max_steps) {
      for (std::size_t i = next; i < targets; ++i) run.truncated[i] = true;
      break;
    }
    const double z = env ? env->value_at(h) : 0.0;
    const double drift = 0.5 * f.derivative(z + density_at(h));

    auto cell = static_cast<std::size_t>(h * inv_dh);
    if (cell >= occ.size()) {
      if (has_ceiling) cell = occ.size() - 1;
      else occ.resize(std::max(2 * occ.size(), cell + 1), 0.0);
    }
    occ[cell] += ds;

    double xi;
    if (params.noise_substeps == 1) {
      xi = normal(rng);
    } else {
      xi = 0.0;
      for (int i = 0; i < params.noise_substeps; ++i) xi += normal(rng);
      xi *= noise_scale;
    }
    double next_h = h + drift * ds + sqds * xi;
    for (;;) {
      if (next_h < 0.0) {
        fold += -2.0 * next_h;
        next_h = -next_h;
      } else if (next_h > K) {
        fold_top += 2.0 * (next_h - K);
        next_h = 2.0 * K - next_h;
      } else {
        break;
      }
    }
    h = next_h;
    ++steps;
    if (params.record_path) run.path.push_back(h);

    const double zero_lt = params.calibration * fold;
    while (next < targets && zero_lt > params.x_targets[next]) {
      LocalTimeField field;
      field.dh = dh;
      field.zero_local_time = zero_lt;
      std::size_t top = occ.size();
      while (top > 0 && occ[top - 1] == 0.0) --top;
      field.accumulated.resize(top);
      for (std::size_t j = 0; j < top; ++j) field.accumulated[j] = occ[j] * inv_dh;
      run.snapshots.push_back(std::move(field));
      run.s_values[next] = static_cast<double>(steps) * ds;
      ++next;
    }
  }
  run.steps = steps;
  run.fold_at_zero = fold;
  run.fold_at_ceiling = fold_top;
  return run;
}

}  // namespace

ReflectedRun simulate_reflected(const RKParams& params, Engine& rng) {
  gate(params);
  return reflect(params, rng);
}

ReflectedRun simulate_reflected(const RKParams& params, std::uint64_t seed) {
  Engine rng(seed);
  return simulate_reflected(params, rng);
}

CalibrationReport calibrate_zero_local_time(double ds, double dh, double run_time, std::size_t replicates,
                                            std::uint64_t master_seed, unsigned threads, int noise_substeps) {
  if (replicates < 2) throw std::invalid_argument("calibration needs at least 2 replicates");
  if (!(run_time > 0.0)) throw std::invalid_argument("run_time must be > 0");
  RKParams p;
  p.ds = ds;
  p.dh = dh;
  p.ceiling = 1.0;
  p.noise_substeps = noise_substeps;
  // Unreachable target: the run stops at the step cap.
  p.x_targets = {std::numeric_limits<double>::max()};
  p.s_cap = run_time;
  p.validate();

  std::vector<double> density(replicates);
  std::vector<double> folds(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, "calibration", i);
    // Track occupation of the two lowest cells directly.
    const double sqds = std::sqrt(ds);
    const double scale = 1.0 / std::sqrt(static_cast<double>(noise_substeps));
    std::normal_distribution<double> normal;
    const auto n = static_cast<std::uint64_t>(std::ceil(run_time / ds));
    double h = 0.0;
    double fold = 0.0;
    double occ0 = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
      if (h < dh) occ0 += ds;
      double xi;
      if (noise_substeps == 1) {
        xi = normal(rng);
      } else {
        xi = 0.0;
        for (int s = 0; s < noise_substeps; ++s) xi += normal(rng);
        xi *= scale;
      }
      double next = h + sqds * xi;
      for (;;) {
        if (next < 0.0) {
          fold += -2.0 * next;
          next = -next;
        } else if (next > 1.0) {
          next = 2.0 - next;
        } else {
          break;
        }
      }
      h = next;
    }
    // The expected profile of a run reflected in [0, 1] is nearly flat near
    // 0, so the lowest cell estimates the density at 0+ directly.
    density[i] = occ0 / dh;
    folds[i] = fold;
  });
  const double d = std::accumulate(density.begin(), density.end(), 0.0);
  const double g = std::accumulate(folds.begin(), folds.end(), 0.0);
  CalibrationReport report;
  report.constant = d / g;
  report.replicates = replicates;
  // Delta-method SE of a ratio estimator.
  const double n = static_cast<double>(replicates);
  const double mean_g = g / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < replicates; ++i) {
    const double r = density[i] - report.constant * folds[i];
    ss += r * r;
  }
  report.standard_error = std::sqrt(ss / (n - 1.0) / n) / mean_g;
  return report;
}

std::vector<double> RKEnsemble::field_samples(std::size_t target, double level) const {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const ReflectedRun& r : runs)
    if (target < r.snapshots.size() && !r.truncated[target]) out.push_back(r.snapshots[target].value_at(level));
  return out;
}

std::vector<double> RKEnsemble::s_samples(std::size_t target) const {
  std::vector<double> out;
  for (const ReflectedRun& r : runs)
    if (target < r.s_values.size() && !r.truncated[target]) out.push_back(r.s_values[target]);
  return out;
}

RKEnsemble ray_knight_field(const RKParams& params, std::size_t replicates, std::uint64_t master_seed,
                            unsigned threads) {
  gate(params);
  RKEnsemble ensemble;
  ensemble.runs.resize(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, "rayknight", i);
    ensemble.runs[i] = reflect(params, rng);
  });
  for (const ReflectedRun& r : ensemble.runs)
    if (!r.complete()) ++ensemble.truncated_runs;
  return ensemble;
}

double total_mass_identity(const LocalTimeField& field, double s_x) {
  if (!(s_x > 0.0)) throw std::invalid_argument("S_x must be > 0");
  return std::abs(s_x - field.total_mass()) / s_x;
}

std::vector<double> excursion_projection(const std::vector<double>& path, double a, double b) {
  if (!(0.0 < a && a < b)) throw std::invalid_argument("projection needs 0 < a < b");
  std::vector<double> out;
  out.reserve(path.size());
  for (double h : path)
    if (h < a) out.push_back(h);
  return out;
}

}  // namespace bpi
