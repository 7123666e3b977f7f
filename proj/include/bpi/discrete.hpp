#pragma once

#include <cstdint>
#include <vector>

#include "bpi/interaction.hpp"
#include "bpi/rng.hpp"

namespace bpi {

/// Parameters of the interacting birth-death chain. With `scale` N > 1 the
/// chain is the renormalized one: counts k carry mass k/N and the
/// interaction contribution of the individual at left-rank l is
/// N * (f((l+1)/N) - f(l/N))^{+/-}. scale = 1 is the unrenormalized model.
struct DiscreteParams {
  double lambda = 0.0;  // per-capita natural birth rate
  double mu = 0.0;      // per-capita natural death rate
  InteractionFunction f = InteractionFunction::zero();
  std::int64_t m = 0;   // ancestors
  double t_max = 1.0;
  std::uint64_t max_events = 10'000'000;
  std::int64_t scale = 1;

  void validate() const;
};

/// Right-continuous piecewise-constant path of an integer count with
/// values count/scale. Jumps are +-1 in count; 0 is absorbing.
struct StepPath {
  std::int64_t initial = 0;
  std::vector<double> jump_times;
  std::vector<std::int64_t> counts;  // count right after each jump
  std::int64_t scale = 1;
  double t_end = 0.0;
  bool truncated = false;  // event cap reached before t_end

  std::int64_t count_at(double t) const;
  double value_at(double t) const { return static_cast<double>(count_at(t)) / static_cast<double>(scale); }
  std::int64_t final_count() const { return counts.empty() ? initial : counts.back(); }
  std::size_t events() const { return jump_times.size(); }
};

/// Predictable and realized brackets of the compensated martingale of the
/// renormalized chain, sampled on a grid.
struct MartingaleLedger {
  std::vector<double> times;
  std::vector<double> predictable;
  std::vector<double> realized;
};

struct Rates {
  double birth = 0.0;
  double death = 0.0;
};

/// Prefix sums P(k) = sum_{l<=k} (N df_l)^+ and Q(k) = sum_{l<=k} (N df_l)^-
/// with df_l = f(l/N) - f((l-1)/N), extended lazily. Each entry is computed
/// once, so rates read from the table are identical on every call.
class InteractionSums {
 public:
  InteractionSums(InteractionFunction f, std::int64_t scale);

  double positive(std::int64_t k);
  double negative(std::int64_t k);
  /// (N df_l)^+ and (N df_l)^- for the individual at 1-based rank l.
  double positive_increment(std::int64_t l);
  double negative_increment(std::int64_t l);
  /// sum_l |N df_l| for l <= k.
  double total_variation(std::int64_t k) { return positive(k) + negative(k); }

 private:
  void extend(std::int64_t k);

  InteractionFunction f_;
  std::int64_t scale_;
  std::vector<double> pos_{0.0};
  std::vector<double> neg_{0.0};
  std::vector<double> dpos_{0.0};
  std::vector<double> dneg_{0.0};
  double last_f_ = 0.0;
};

/// Total jump rates of the chain at count k >= 1 (unrenormalized, N = 1).
Rates total_rates(const InteractionFunction& f, double lambda, double mu, std::int64_t k);
/// Same with interaction scale N.
Rates total_rates(InteractionSums& sums, double lambda, double mu, std::int64_t k);

/// Parameters of the renormalized chain Z^{N,x}: m = floor(N x),
/// lambda = mu = 2N, interaction multiplied by N with argument divided by N.
DiscreteParams renormalized_params(double x, std::int64_t N, const InteractionFunction& f, double t_max = 1.0);

StepPath simulate_population(const DiscreteParams& params, Engine& rng);

/// Increment V = X^n - X^m given a realized base path of X^m, started from
/// n - m and driven by the time-inhomogeneous rates read off base_path.
StepPath simulate_increment(const DiscreteParams& params, const StepPath& base_path, std::int64_t n_minus_m,
                            Engine& rng);

struct RenormalizedRun {
  StepPath path;
  MartingaleLedger ledger;
};

/// Z^{N,x} with its bracket ledger on a grid of `ledger_points` + 1 times.
RenormalizedRun simulate_renormalized(double x, std::int64_t N, const InteractionFunction& f, double t_max,
                                      Engine& rng, std::size_t ledger_points = 100,
                                      std::uint64_t max_events = 10'000'000);

struct CoupledPair {
  StepPath lower;      // Z^{N,x}
  StepPath increment;  // V^{N,x,y}; Z^{N,y} = lower + increment
};

/// Joint simulation of (Z^{N,x}, V^{N,x,y}) with the four jump channels.
CoupledPair simulate_coupled_pair(double x, double y, std::int64_t N, const InteractionFunction& f, double t_max,
                                  Engine& rng, std::uint64_t max_events = 10'000'000);

}  // namespace bpi
