#include "bpi/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bpi {

void DiscreteParams::validate() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw std::invalid_argument("natural rates must be >= 0");
  if (m < 0) throw std::invalid_argument("ancestor count must be >= 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  if (max_events == 0) throw std::invalid_argument("max_events must be positive");
}

std::int64_t StepPath::count_at(double t) const {
  // Right-continuous: a jump at time t is already included.
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return initial;
  return counts[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

InteractionSums::InteractionSums(InteractionFunction f, std::int64_t scale) : f_(std::move(f)), scale_(scale) {
  if (scale_ < 1) throw std::invalid_argument("scale must be >= 1");
}

void InteractionSums::extend(std::int64_t k) {
  const double n = static_cast<double>(scale_);
  while (static_cast<std::int64_t>(pos_.size()) <= k) {
    const auto l = static_cast<std::int64_t>(pos_.size());
    const double fl = scale_ == 1 ? f_(static_cast<double>(l)) : f_(static_cast<double>(l) / n);
    const double d = scale_ == 1 ? fl - last_f_ : n * (fl - last_f_);
    last_f_ = fl;
    const double up = d > 0.0 ? d : 0.0;
    const double down = d < 0.0 ? -d : 0.0;
    dpos_.push_back(up);
    dneg_.push_back(down);
    pos_.push_back(pos_.back() + up);
    neg_.push_back(neg_.back() + down);
  }
}

double InteractionSums::positive(std::int64_t k) {
  extend(k);
  return pos_[static_cast<std::size_t>(k)];
}

double InteractionSums::negative(std::int64_t k) {
  extend(k);
  return neg_[static_cast<std::size_t>(k)];
}

double InteractionSums::positive_increment(std::int64_t l) {
  extend(l);
  return dpos_[static_cast<std::size_t>(l)];
}

double InteractionSums::negative_increment(std::int64_t l) {
  extend(l);
  return dneg_[static_cast<std::size_t>(l)];
}

Rates total_rates(InteractionSums& sums, double lambda, double mu, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("total_rates needs k >= 1");
  const double kk = static_cast<double>(k);
  return {lambda * kk + sums.positive(k), mu * kk + sums.negative(k)};
}

Rates total_rates(const InteractionFunction& f, double lambda, double mu, std::int64_t k) {
  InteractionSums sums(f, 1);
  return total_rates(sums, lambda, mu, k);
}

DiscreteParams renormalized_params(double x, std::int64_t N, const InteractionFunction& f, double t_max) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("x must be >= 0");
  DiscreteParams p;
  p.lambda = 2.0 * static_cast<double>(N);
  p.mu = 2.0 * static_cast<double>(N);
  p.f = f;
  p.m = static_cast<std::int64_t>(std::floor(static_cast<double>(N) * x));
  p.t_max = t_max;
  p.scale = N;
  return p;
}

namespace {

double exponential(Engine& rng, double rate) {
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return std::exponential_distribution<double>(rate)(rng);
}

double uniform(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

StepPath simulate_population(const DiscreteParams& params, Engine& rng) {
  params.validate();
  InteractionSums sums(params.f, params.scale);
  StepPath path;
  path.initial = params.m;
  path.scale = params.scale;
  path.t_end = params.t_max;
  std::int64_t k = params.m;
  double t = 0.0;
  while (k > 0) {
    const Rates r = total_rates(sums, params.lambda, params.mu, k);
    const double total = r.birth + r.death;
    t += exponential(rng, total);
    if (!(t < params.t_max)) break;
    if (path.events() >= params.max_events) {
      path.truncated = true;
      path.t_end = path.jump_times.empty() ? 0.0 : path.jump_times.back();
      break;
    }
    k += uniform(rng) * total < r.birth ? 1 : -1;
    path.jump_times.push_back(t);
    path.counts.push_back(k);
  }
  return path;
}

StepPath simulate_increment(const DiscreteParams& params, const StepPath& base_path, std::int64_t n_minus_m,
                            Engine& rng) {
  params.validate();
  if (n_minus_m < 0) throw std::invalid_argument("n - m must be >= 0");
  if (base_path.scale != params.scale) throw std::invalid_argument("base path scale differs from params");
  InteractionSums sums(params.f, params.scale);
  StepPath path;
  path.initial = n_minus_m;
  path.scale = params.scale;
  const double horizon = std::min(params.t_max, base_path.t_end);
  path.t_end = horizon;
  std::int64_t v = n_minus_m;
  double t = 0.0;
  std::size_t next_base = 0;
  std::int64_t x = base_path.initial;
  while (v > 0) {
    // Rates are constant until the next base jump; memorylessness lets us
    // restart the exponential clock at each base event.
    const double boundary =
        next_base < base_path.jump_times.size() ? std::min(base_path.jump_times[next_base], horizon) : horizon;
    const double vv = static_cast<double>(v);
    const double up = params.lambda * vv + std::max(0.0, sums.positive(x + v) - sums.positive(x));
    const double down = params.mu * vv + std::max(0.0, sums.negative(x + v) - sums.negative(x));
    const double candidate = t + exponential(rng, up + down);
    if (candidate < boundary) {
      if (path.events() >= params.max_events) {
        path.truncated = true;
        path.t_end = t;
        break;
      }
      t = candidate;
      v += uniform(rng) * (up + down) < up ? 1 : -1;
      path.jump_times.push_back(t);
      path.counts.push_back(v);
      continue;
    }
    if (!(boundary < horizon)) break;
    t = boundary;
    x = base_path.counts[next_base];
    ++next_base;
  }
  return path;
}

RenormalizedRun simulate_renormalized(double x, std::int64_t N, const InteractionFunction& f, double t_max,
                                      Engine& rng, std::size_t ledger_points, std::uint64_t max_events) {
  DiscreteParams params = renormalized_params(x, N, f, t_max);
  params.max_events = max_events;
  params.validate();
  if (ledger_points == 0) throw std::invalid_argument("ledger needs at least one interval");
  InteractionSums sums(params.f, N);
  const double n2 = static_cast<double>(N) * static_cast<double>(N);

  RenormalizedRun run;
  StepPath& path = run.path;
  path.initial = params.m;
  path.scale = N;
  path.t_end = t_max;
  MartingaleLedger& ledger = run.ledger;
  for (std::size_t i = 0; i <= ledger_points; ++i)
    ledger.times.push_back(t_max * static_cast<double>(i) / static_cast<double>(ledger_points));
  ledger.predictable.reserve(ledger.times.size());
  ledger.realized.reserve(ledger.times.size());

  std::int64_t k = params.m;
  double t = 0.0;
  double bracket = 0.0;  // predictable bracket at time t
  std::size_t grid = 0;
  auto fill_until = [&](double t_next, double rate) {
    while (grid < ledger.times.size() && ledger.times[grid] < t_next) {
      ledger.predictable.push_back(bracket + rate / n2 * (ledger.times[grid] - t));
      ledger.realized.push_back(static_cast<double>(path.events()) / n2);
      ++grid;
    }
  };
  while (k > 0) {
    const Rates r = total_rates(sums, params.lambda, params.mu, k);
    const double total = r.birth + r.death;
    const double t_next = t + exponential(rng, total);
    if (!(t_next < t_max) || path.events() >= params.max_events) {
      if (t_next < t_max) {
        // Truncated: the ledger stays flat past the last simulated event.
        path.truncated = true;
        path.t_end = t;
        fill_until(std::numeric_limits<double>::infinity(), 0.0);
      } else {
        fill_until(std::numeric_limits<double>::infinity(), total);
      }
      break;
    }
    fill_until(t_next, total);
    bracket += total / n2 * (t_next - t);
    t = t_next;
    k += uniform(rng) * total < r.birth ? 1 : -1;
    path.jump_times.push_back(t);
    path.counts.push_back(k);
  }
  // Absorbed at 0: both brackets are frozen from here on.
  fill_until(std::numeric_limits<double>::infinity(), 0.0);
  return run;
}

CoupledPair simulate_coupled_pair(double x, double y, std::int64_t N, const InteractionFunction& f, double t_max,
                                  Engine& rng, std::uint64_t max_events) {
  if (!(y >= x)) throw std::invalid_argument("coupled pair needs x <= y");
  const DiscreteParams lower = renormalized_params(x, N, f, t_max);
  const DiscreteParams upper = renormalized_params(y, N, f, t_max);
  lower.validate();
  InteractionSums sums(f, N);
  const double two_n = 2.0 * static_cast<double>(N);

  CoupledPair pair;
  pair.lower.initial = lower.m;
  pair.increment.initial = upper.m - lower.m;
  pair.lower.scale = pair.increment.scale = N;
  pair.lower.t_end = pair.increment.t_end = t_max;

  std::int64_t i = lower.m;
  std::int64_t j = upper.m - lower.m;
  double t = 0.0;
  std::uint64_t events = 0;
  while (i > 0 || j > 0) {
    const double ii = static_cast<double>(i);
    const double jj = static_cast<double>(j);
    const double z_up = i > 0 ? two_n * ii + sums.positive(i) : 0.0;
    const double z_down = i > 0 ? two_n * ii + sums.negative(i) : 0.0;
    const double v_up = j > 0 ? two_n * jj + std::max(0.0, sums.positive(i + j) - sums.positive(i)) : 0.0;
    const double v_down = j > 0 ? two_n * jj + std::max(0.0, sums.negative(i + j) - sums.negative(i)) : 0.0;
    const double total = z_up + z_down + v_up + v_down;
    const double t_next = t + exponential(rng, total);
    if (!(t_next < t_max)) break;
    if (events >= max_events) {
      pair.lower.truncated = pair.increment.truncated = true;
      pair.lower.t_end = pair.increment.t_end = t;
      break;
    }
    t = t_next;
    ++events;
    double u = uniform(rng) * total;
    if (u < z_up) {
      pair.lower.jump_times.push_back(t);
      pair.lower.counts.push_back(++i);
    } else if ((u -= z_up) < z_down) {
      pair.lower.jump_times.push_back(t);
      pair.lower.counts.push_back(--i);
    } else if ((u -= z_down) < v_up) {
      pair.increment.jump_times.push_back(t);
      pair.increment.counts.push_back(++j);
    } else if (j > 0) {
      pair.increment.jump_times.push_back(t);
      pair.increment.counts.push_back(--j);
    } else {
      pair.lower.jump_times.push_back(t);
      pair.lower.counts.push_back(--i);
    }
  }
  return pair;
}

}  // namespace bpi
