#include "bpi/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bpi/errors.hpp"
#include "bpi/parallel.hpp"

namespace bpi {

namespace {

constexpr double kCap = 1e100;

void check_inputs(double x, double t_max, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be >= 0");
  if (!(x >= 0.0)) throw std::invalid_argument("initial value must be >= 0");
}

inline double euler(double z, double drift, double dt, double sqdt, double xi) {
  return std::max(0.0, z + drift * dt + 2.0 * std::sqrt(z) * sqdt * xi);
}

// Advances z over n steps. drift(k, z) gives the drift at grid index k;
// visit(k, z) sees every grid value and may return false to stop early.
// Returns false when the cap was hit.
template <class Drift, class Visit>
bool integrate(double z, std::size_t n, double dt, Engine& rng, Drift&& drift, Visit&& visit) {
  std::normal_distribution<double> normal;
  const double sqdt = std::sqrt(dt);
  if (!visit(0, z)) return true;
  for (std::size_t k = 0; k < n; ++k) {
    if (z == 0.0) {
      for (std::size_t j = k + 1; j <= n; ++j)
        if (!visit(j, 0.0)) break;
      return true;
    }
    z = euler(z, drift(k, z), dt, sqdt, normal(rng));
    if (!std::isfinite(z) || z > kCap) return false;
    if (!visit(k + 1, z)) return true;
  }
  return true;
}

Trajectory record(double x, std::size_t n, double dt, Engine& rng, const auto& drift) {
  Trajectory tr;
  tr.dt = dt;
  tr.values.reserve(n + 1);
  const bool ok = integrate(x, n, dt, rng, drift, [&](std::size_t k, double z) {
    tr.values.push_back(z);
    if (z == 0.0 && !tr.absorbed_at) tr.absorbed_at = dt * static_cast<double>(k);
    return true;
  });
  tr.capped = !ok;
  return tr;
}

std::vector<double> resample(const Trajectory& env, std::size_t n, double dt) {
  const double need = dt * static_cast<double>(n);
  if (env.values.empty() || env.t_max() + 1e-9 * std::max(1.0, need) < need)
    throw GridMismatch("environment does not cover [0, t_max]");
  std::vector<double> out(n + 1);
  if (env.dt == dt) {
    std::copy(env.values.begin(), env.values.begin() + static_cast<std::ptrdiff_t>(n + 1), out.begin());
    return out;
  }
  for (std::size_t k = 0; k <= n; ++k) out[k] = env.value_at(dt * static_cast<double>(k));
  return out;
}

}  // namespace

double Trajectory::value_at(double t) const {
  if (values.empty()) return 0.0;
  if (t <= 0.0) return values.front();
  const double pos = t / dt;
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= values.size()) return values.back();
  const double w = pos - static_cast<double>(k);
  return values[k] + w * (values[k + 1] - values[k]);
}

Trajectory Trajectory::constant(double value, double t_max, double dt) {
  Trajectory tr;
  tr.dt = dt;
  tr.values.assign(step_count(t_max, dt) + 1, value);
  if (value == 0.0) tr.absorbed_at = 0.0;
  return tr;
}

std::size_t step_count(double t_max, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  return static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
}

Trajectory solve_feller(const InteractionFunction& f, double x, double t_max, double dt, Engine& rng) {
  check_inputs(x, t_max, dt);
  return record(x, step_count(t_max, dt), dt, rng, [&](std::size_t, double z) { return f(z); });
}

Trajectory solve_feller(const InteractionFunction& f, double x, double t_max, double dt, std::uint64_t seed) {
  Engine rng(seed);
  return solve_feller(f, x, t_max, dt, rng);
}

CoupledTrajectories solve_coupled(const InteractionFunction& f, double x, double y, double t_max, double dt,
                                  Engine& rng_lower, Engine& rng_increment) {
  if (!(y >= x)) throw std::invalid_argument("coupled solve needs x <= y");
  CoupledTrajectories out;
  out.lower = solve_feller(f, x, t_max, dt, rng_lower);
  const auto& zv = out.lower.values;
  out.increment = record(y - x, zv.size() - 1, dt, rng_increment, [&](std::size_t k, double v) {
    return f(zv[k] + v) - f(zv[k]);
  });
  if (out.lower.capped) out.increment.values.resize(std::min(out.increment.values.size(), zv.size()));
  return out;
}

CoupledTrajectories solve_coupled(const InteractionFunction& f, double x, double y, double t_max, double dt,
                                  std::uint64_t seed) {
  Engine lower(seed);
  Engine increment(derive_seed(seed, "increment", 0));
  return solve_coupled(f, x, y, t_max, dt, lower, increment);
}

Trajectory solve_environment(const InteractionFunction& f, double x, const Trajectory& env, double t_max, double dt,
                             Engine& rng) {
  check_inputs(x, t_max, dt);
  const std::size_t n = step_count(t_max, dt);
  const std::vector<double> e = resample(env, n, dt);
  return record(x, n, dt, rng, [&](std::size_t k, double z) { return f(z + e[k]) - f(e[k]); });
}

Trajectory solve_environment(const InteractionFunction& f, double x, const Trajectory& env, double t_max, double dt,
                             std::uint64_t seed) {
  Engine rng(seed);
  return solve_environment(f, x, env, t_max, dt, rng);
}

std::vector<double> feller_marginal(const InteractionFunction& f, double x, double t, double dt,
                                    std::size_t replicates, std::uint64_t master_seed, unsigned threads,
                                    const std::string& tag) {
  check_inputs(x, t, dt);
  const std::size_t n = step_count(t, dt);
  std::vector<double> out(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, tag, i);
    double last = 0.0;
    const bool ok = integrate(x, n, dt, rng, [&](std::size_t, double z) { return f(z); },
                              [&](std::size_t, double z) {
                                last = z;
                                return true;
                              });
    out[i] = ok ? last : std::numeric_limits<double>::infinity();
  });
  return out;
}

std::vector<double> environment_marginal(const InteractionFunction& f, double x, const Trajectory& env, double t,
                                         double dt, std::size_t replicates, std::uint64_t master_seed,
                                         unsigned threads, const std::string& tag) {
  check_inputs(x, t, dt);
  const std::size_t n = step_count(t, dt);
  const std::vector<double> e = resample(env, n, dt);
  std::vector<double> out(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, tag, i);
    double last = 0.0;
    const bool ok = integrate(x, n, dt, rng, [&](std::size_t k, double z) { return f(z + e[k]) - f(e[k]); },
                              [&](std::size_t, double z) {
                                last = z;
                                return true;
                              });
    out[i] = ok ? last : std::numeric_limits<double>::infinity();
  });
  return out;
}

Proportion binomial_proportion(std::size_t successes, std::size_t trials) {
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  if (trials == 0) return p;
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / n;
  const double centre = (ph + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / denom;
  p.estimate = ph;
  p.standard_error = std::sqrt(ph * (1.0 - ph) / n);
  p.ci_low = std::max(0.0, centre - half);
  p.ci_high = std::min(1.0, centre + half);
  return p;
}

FirstHitReport first_hit(const InteractionFunction& f, double x, double a, double b, double dt,
                         std::size_t replicates, std::uint64_t master_seed, double t_cap, unsigned threads) {
  if (!(0.0 <= a && a < x && x < b)) throw std::invalid_argument("first_hit needs 0 <= a < x < b");
  check_inputs(x, t_cap, dt);
  const std::size_t n = step_count(t_cap, dt);
  // 0: lower first, 1: upper first, 2: neither
  std::vector<int> outcome(replicates, 2);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, "first_hit", i);
    const bool ok = integrate(x, n, dt, rng, [&](std::size_t, double z) { return f(z); },
                              [&](std::size_t, double z) {
                                if (z <= a) outcome[i] = 0;
                                else if (z >= b) outcome[i] = 1;
                                return outcome[i] == 2;
                              });
    if (!ok) outcome[i] = 1;
  });
  FirstHitReport report;
  std::size_t lower = 0;
  std::size_t terminated = 0;
  for (int o : outcome) {
    if (o == 2) {
      ++report.non_terminated;
      continue;
    }
    ++terminated;
    if (o == 0) ++lower;
  }
  report.hit_lower_first = binomial_proportion(lower, terminated);
  if (report.non_terminated > 0)
    report.warning = std::to_string(report.non_terminated) + " runs hit neither barrier before t_cap; excluded";
  return report;
}

ExtinctionReport extinction_stats(const InteractionFunction& f, double x, double t_cap, double dt,
                                  std::size_t replicates, std::uint64_t master_seed, unsigned threads) {
  check_inputs(x, t_cap, dt);
  const std::size_t n = step_count(t_cap, dt);
  std::vector<double> mass(replicates, 0.0);
  std::vector<double> time(replicates, std::numeric_limits<double>::infinity());
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, "extinction", i);
    double prev = x;
    double total = 0.0;
    integrate(x, n, dt, rng, [&](std::size_t, double z) { return f(z); }, [&](std::size_t k, double z) {
      if (k > 0) total += 0.5 * dt * (prev + z);
      prev = z;
      if (z == 0.0) {
        time[i] = dt * static_cast<double>(k);
        return false;
      }
      return true;
    });
    mass[i] = total;
  });
  ExtinctionReport report;
  std::size_t extinct = 0;
  double mass_sum = 0.0;
  for (std::size_t i = 0; i < replicates; ++i) {
    if (std::isfinite(time[i])) {
      ++extinct;
      mass_sum += mass[i];
      report.total_masses.push_back(mass[i]);
      report.extinction_times.push_back(time[i]);
    }
  }
  report.extinct = binomial_proportion(extinct, replicates);
  report.mean_total_mass = extinct ? mass_sum / static_cast<double>(extinct) : 0.0;
  if (x > 0.0) {
    const ScaleReport cls = classify(f);
    if (cls.classification != Criticality::Subcritical)
      report.warning = "interaction is " + to_string(cls.classification) + "; extinction is not almost sure";
  }
  return report;
}

}  // namespace bpi
