#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bpi/interaction.hpp"

namespace bpi {

struct SampleSet {
  std::vector<double> values;
  std::string label;
  std::map<std::string, std::string> metadata;

  SampleSet() = default;
  SampleSet(std::vector<double> v, std::string l = {}) : values(std::move(v)), label(std::move(l)) {}
  std::size_t size() const { return values.size(); }
};

/// Sup distance between the two empirical CDFs (merged sweep, ties grouped).
double ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);
double ks_two_sample(const SampleSet& a, const SampleSet& b);

struct MomentReport {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // n - 1 divisor
  double standard_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

MomentReport moment_report(const std::vector<double>& a);
MomentReport moment_report(const SampleSet& a);

enum class Verdict { Pass, Fail };
std::string to_string(Verdict v);

struct ComparisonReport {
  double ks_statistic = 0.0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  double mean_diff = 0.0;    // mean(a) - mean(b)
  double combined_se = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Fail;
};

/// Pass iff the KS statistic is below the threshold.
ComparisonReport compare(const SampleSet& a, const SampleSet& b, double threshold);

struct ConvergenceRow {
  std::int64_t N = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ks_vs_limit = 0.0;
  std::size_t truncated = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  MomentReport limit;
  std::vector<double> limit_samples;
};

/// Z^{N,x}_t from the renormalized chain for each N against Z^x_t from the
/// Euler scheme at step dt.
ConvergenceTable convergence_experiment(const InteractionFunction& f, double x, double t,
                                        const std::vector<std::int64_t>& N_list, double dt, std::size_t replicates,
                                        std::uint64_t master_seed, unsigned threads = 1);

/// Samples of Z^{N,x}_t; truncated runs are dropped and counted.
std::vector<double> renormalized_marginal(const InteractionFunction& f, double x, std::int64_t N, double t,
                                          std::size_t replicates, std::uint64_t master_seed, unsigned threads,
                                          std::size_t* truncated = nullptr, const std::string& tag = "renormalized");

}  // namespace bpi
