#include "bpi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bpi/diffusion.hpp"
#include "bpi/discrete.hpp"
#include "bpi/errors.hpp"
#include "bpi/parallel.hpp"

namespace bpi {

double ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw EmptySample("ks_two_sample needs two nonempty samples");
  std::vector<double> x(a);
  std::vector<double> y(b);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_two_sample(const SampleSet& a, const SampleSet& b) { return ks_two_sample(a.values, b.values); }

MomentReport moment_report(const std::vector<double>& a) {
  if (a.size() < 2) throw EmptySample("moment_report needs at least two values");
  MomentReport r;
  r.count = a.size();
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : a) ss += (v - mean) * (v - mean);
  r.mean = mean;
  r.variance = ss / (n - 1.0);
  r.standard_error = std::sqrt(r.variance / n);
  r.ci_low = mean - 1.959963984540054 * r.standard_error;
  r.ci_high = mean + 1.959963984540054 * r.standard_error;
  return r;
}

MomentReport moment_report(const SampleSet& a) { return moment_report(a.values); }

std::string to_string(Verdict v) { return v == Verdict::Pass ? "Pass" : "Fail"; }

ComparisonReport compare(const SampleSet& a, const SampleSet& b, double threshold) {
  ComparisonReport r;
  r.ks_statistic = ks_two_sample(a, b);
  r.size_a = a.size();
  r.size_b = b.size();
  const MomentReport ma = moment_report(a);
  const MomentReport mb = moment_report(b);
  r.mean_diff = ma.mean - mb.mean;
  r.combined_se = std::hypot(ma.standard_error, mb.standard_error);
  r.threshold = threshold;
  r.verdict = r.ks_statistic < threshold ? Verdict::Pass : Verdict::Fail;
  return r;
}

std::vector<double> renormalized_marginal(const InteractionFunction& f, double x, std::int64_t N, double t,
                                          std::size_t replicates, std::uint64_t master_seed, unsigned threads,
                                          std::size_t* truncated, const std::string& tag) {
  const DiscreteParams params = renormalized_params(x, N, f, t);
  std::vector<double> values(replicates);
  std::vector<char> cut(replicates, 0);
  parallel_for(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, tag + ":" + std::to_string(N), i);
    const StepPath path = simulate_population(params, rng);
    cut[i] = path.truncated ? 1 : 0;
    values[i] = static_cast<double>(path.final_count()) / static_cast<double>(N);
  });
  std::vector<double> out;
  out.reserve(replicates);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < replicates; ++i) {
    if (cut[i]) ++dropped;
    else out.push_back(values[i]);
  }
  if (truncated) *truncated = dropped;
  return out;
}

ConvergenceTable convergence_experiment(const InteractionFunction& f, double x, double t,
                                        const std::vector<std::int64_t>& N_list, double dt, std::size_t replicates,
                                        std::uint64_t master_seed, unsigned threads) {
  if (N_list.empty()) throw std::invalid_argument("N_list is empty");
  for (std::size_t i = 1; i < N_list.size(); ++i)
    if (!(N_list[i] > N_list[i - 1])) throw std::invalid_argument("N_list must increase");
  ConvergenceTable table;
  table.limit_samples = feller_marginal(f, x, t, dt, replicates, master_seed, threads, "convergence-limit");
  table.limit = moment_report(table.limit_samples);
  for (std::int64_t N : N_list) {
    ConvergenceRow row;
    row.N = N;
    const std::vector<double> z =
        renormalized_marginal(f, x, N, t, replicates, master_seed, threads, &row.truncated, "convergence");
    const MomentReport m = moment_report(z);
    row.mean = m.mean;
    row.variance = m.variance;
    row.ks_vs_limit = ks_two_sample(z, table.limit_samples);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace bpi
