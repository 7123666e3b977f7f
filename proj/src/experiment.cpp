#include "bpi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "bpi/diffusion.hpp"
#include "bpi/discrete.hpp"
#include "bpi/errors.hpp"
#include "bpi/forest.hpp"
#include "bpi/io.hpp"
#include "bpi/parallel.hpp"
#include "bpi/rayknight.hpp"

namespace bpi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCodeVersion = "bpi 1.0.0";

const std::map<std::string, Model>& model_names() {
  static const std::map<std::string, Model> names{
      {"classify", Model::Classify},   {"discrete", Model::Discrete},   {"renormalized", Model::Renormalized},
      {"forest", Model::Forest},       {"diffusion", Model::Diffusion}, {"rayknight", Model::RayKnight},
      {"convergence", Model::Convergence}, {"compare", Model::Compare}};
  return names;
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

// Typed access to the params section with range checks.
class Params {
 public:
  explicit Params(const json& j) : j_(j) {}

  bool has(const std::string& k) const { return j_.contains(k); }

  double number(const std::string& k, double def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_number()) throw ConfigError("params." + k + " must be a number");
    const double v = j_.at(k).get<double>();
    if (!std::isfinite(v)) throw ConfigError("params." + k + " must be finite");
    return v;
  }
  double positive(const std::string& k, double def) const {
    const double v = number(k, def);
    if (!(v > 0.0)) throw ConfigError("params." + k + " must be > 0");
    return v;
  }
  double nonnegative(const std::string& k, double def) const {
    const double v = number(k, def);
    if (!(v >= 0.0)) throw ConfigError("params." + k + " must be >= 0");
    return v;
  }
  std::int64_t integer(const std::string& k, std::int64_t def, std::int64_t min) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_number_integer()) throw ConfigError("params." + k + " must be an integer");
    const auto v = j_.at(k).get<std::int64_t>();
    if (v < min) throw ConfigError("params." + k + " must be >= " + std::to_string(min));
    return v;
  }
  bool flag(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_boolean()) throw ConfigError("params." + k + " must be true or false");
    return j_.at(k).get<bool>();
  }
  std::string text(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_string()) throw ConfigError("params." + k + " must be a string");
    return j_.at(k).get<std::string>();
  }
  std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    const json& a = j_.at(k);
    if (!a.is_array() || a.empty()) throw ConfigError("params." + k + " must be a nonempty array");
    std::vector<double> out;
    for (const auto& v : a) {
      if (!v.is_number()) throw ConfigError("params." + k + " must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::vector<std::int64_t> integers(const std::string& k, std::vector<std::int64_t> def) const {
    if (!has(k)) return def;
    const json& a = j_.at(k);
    if (!a.is_array() || a.empty()) throw ConfigError("params." + k + " must be a nonempty array");
    std::vector<std::int64_t> out;
    for (const auto& v : a) {
      if (!v.is_number_integer()) throw ConfigError("params." + k + " must hold integers");
      out.push_back(v.get<std::int64_t>());
    }
    return out;
  }

 private:
  const json& j_;
};

const std::map<Model, std::set<std::string>>& allowed_params() {
  static const std::map<Model, std::set<std::string>> allowed{
      {Model::Classify, {"tail_limit", "tolerance", "expect"}},
      {Model::Discrete, {"lambda", "mu", "m", "t_max", "replicates", "max_events"}},
      {Model::Renormalized, {"x", "y", "N", "t_max", "replicates", "ledger_points", "max_events", "sigma", "threshold"}},
      {Model::Forest, {"lambda", "mu", "m", "N", "p", "t_max", "replicates", "max_events", "level_step"}},
      {Model::Diffusion,
       {"task", "x", "y", "t_max", "dt", "replicates", "a", "b", "t_cap", "env_value", "threshold", "allowance"}},
      {Model::RayKnight,
       {"x_targets", "ds", "dh", "ceiling", "env_value", "s_cap", "replicates", "level", "calibrate", "calibration",
        "calibration_replicates", "calibration_time", "threshold", "dt", "reference_replicates"}},
      {Model::Convergence, {"x", "t", "N_list", "dt", "replicates", "threshold"}},
      {Model::Compare, {"a", "b", "column", "threshold"}},
  };
  return allowed;
}

// Reads every parameter once so that range errors surface before a run.
void validate_params(Model model, const json& j) {
  const Params p(j);
  switch (model) {
    case Model::Classify: {
      p.positive("tail_limit", 100.0);
      p.positive("tolerance", 1e-6);
      const std::string e = p.text("expect", "");
      if (!e.empty() && e != "Subcritical" && e != "Supercritical" && e != "Inconclusive")
        throw ConfigError("params.expect must be Subcritical, Supercritical or Inconclusive");
      break;
    }
    case Model::Discrete:
      p.nonnegative("lambda", 1.0);
      p.nonnegative("mu", 1.0);
      p.integer("m", 1, 0);
      p.positive("t_max", 1.0);
      p.integer("replicates", 1000, 1);
      p.integer("max_events", 10'000'000, 1);
      break;
    case Model::Renormalized: {
      const double x = p.nonnegative("x", 1.0);
      if (p.has("y") && !(p.number("y", 0.0) >= x)) throw ConfigError("params.y must be >= params.x");
      p.integer("N", 50, 1);
      p.positive("t_max", 1.0);
      p.integer("replicates", 1000, 2);
      p.integer("ledger_points", 100, 1);
      p.integer("max_events", 10'000'000, 1);
      p.positive("sigma", 3.0);
      p.positive("threshold", 0.03);
      break;
    }
    case Model::Forest:
      p.nonnegative("lambda", 1.0);
      p.nonnegative("mu", 1.0);
      p.integer("m", 1, 0);
      p.integer("N", 1, 1);
      p.positive("p", 2.0);
      p.positive("t_max", 1.0);
      p.integer("replicates", 100, 1);
      p.integer("max_events", 10'000'000, 1);
      p.positive("level_step", 0.01);
      break;
    case Model::Diffusion: {
      const std::string task = p.text("task", "marginal");
      static const std::set<std::string> tasks{"marginal", "coupled", "environment", "first_hit", "extinction"};
      if (!tasks.count(task)) throw ConfigError("params.task must be one of marginal, coupled, environment, first_hit, extinction");
      const double x = p.nonnegative("x", 1.0);
      p.positive("t_max", 1.0);
      p.positive("dt", 1e-3);
      p.integer("replicates", 1000, 2);
      p.nonnegative("env_value", 0.0);
      p.positive("threshold", 0.03);
      p.nonnegative("allowance", 0.02);
      p.positive("t_cap", 20.0);
      if (task == "coupled" && !(p.number("y", x + 1.0) >= x)) throw ConfigError("params.y must be >= params.x");
      if (task == "first_hit") {
        const double a = p.nonnegative("a", 0.0);
        const double b = p.number("b", 2.0 * x);
        if (!(a < x && x < b)) throw ConfigError("first_hit needs a < x < b");
      }
      break;
    }
    case Model::RayKnight: {
      const auto targets = p.numbers("x_targets", {1.0});
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!(targets[i] > 0.0)) throw ConfigError("params.x_targets must be > 0");
        if (i && !(targets[i] > targets[i - 1])) throw ConfigError("params.x_targets must increase strictly");
      }
      p.positive("ds", 1e-4);
      p.positive("dh", 0.02);
      if (p.has("ceiling")) p.positive("ceiling", 1.0);
      p.nonnegative("env_value", 0.0);
      p.nonnegative("s_cap", 0.0);
      p.integer("replicates", 100, 2);
      p.nonnegative("level", 0.5);
      p.flag("calibrate", true);
      p.positive("calibration", 2.0);
      p.integer("calibration_replicates", 200, 2);
      p.positive("calibration_time", 10.0);
      p.positive("threshold", 0.05);
      p.positive("dt", 1e-3);
      p.integer("reference_replicates", 0, 0);
      break;
    }
    case Model::Convergence: {
      p.nonnegative("x", 1.0);
      p.positive("t", 1.0);
      const auto Ns = p.integers("N_list", {5, 20, 80});
      for (std::size_t i = 0; i < Ns.size(); ++i) {
        if (Ns[i] < 1) throw ConfigError("params.N_list entries must be >= 1");
        if (i && Ns[i] <= Ns[i - 1]) throw ConfigError("params.N_list must increase");
      }
      p.positive("dt", 1e-3);
      p.integer("replicates", 1000, 2);
      if (p.has("threshold")) p.positive("threshold", 0.05);
      break;
    }
    case Model::Compare:
      if (p.text("a", "").empty() || p.text("b", "").empty()) throw ConfigError("params.a and params.b are required");
      p.text("column", "value");
      p.positive("threshold", 0.03);
      break;
  }
}

json moments_json(const std::vector<double>& v) {
  if (v.size() < 2) return json{{"count", v.size()}};
  const MomentReport m = moment_report(v);
  return json{{"count", m.count},          {"mean", m.mean},   {"variance", m.variance},
              {"standard_error", m.standard_error}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
}

json proportion_json(const Proportion& p) {
  return json{{"estimate", p.estimate}, {"ci_low", p.ci_low},     {"ci_high", p.ci_high},
              {"standard_error", p.standard_error}, {"successes", p.successes}, {"trials", p.trials}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct Context {
  const ExperimentConfig& config;
  const Params p;
  ExperimentResult& result;

  fs::path file(const std::string& name) {
    result.artifacts.push_back(name);
    return config.output_dir / name;
  }
  std::size_t replicates(std::int64_t def) const { return static_cast<std::size_t>(p.integer("replicates", def, 1)); }
};

void run_classify(Context& c) {
  const ScaleReport r = classify(c.config.f, c.p.positive("tail_limit", 100.0), c.p.positive("tolerance", 1e-6));
  const HypothesisReport h = validate_hypotheses(c.config.f, 100.0, 0.01);
  json out{{"classification", to_string(r.classification)},
           {"lambda_infinite", r.lambda_infinite},
           {"lambda_estimate", r.lambda_infinite ? json("inf") : json(r.lambda_estimate)},
           {"upper_limit_used", r.upper_limit_used},
           {"quadrature_tolerance", r.quadrature_tolerance},
           {"rule", r.rule},
           {"hypothesis_a", h.a},
           {"hypothesis_b", h.b},
           {"beta", c.config.f.beta()}};
  write_json(c.file("classification.json"), out);
  c.result.summary = out;
  const std::string expect = c.p.text("expect", "");
  c.result.verdict = expect.empty() || expect == to_string(r.classification) ? Verdict::Pass : Verdict::Fail;
}

void run_discrete(Context& c) {
  DiscreteParams params;
  params.lambda = c.p.nonnegative("lambda", 1.0);
  params.mu = c.p.nonnegative("mu", 1.0);
  params.f = c.config.f;
  params.m = c.p.integer("m", 1, 0);
  params.t_max = c.p.positive("t_max", 1.0);
  params.max_events = static_cast<std::uint64_t>(c.p.integer("max_events", 10'000'000, 1));
  const std::size_t n = c.replicates(1000);
  std::vector<double> finals(n);
  std::vector<char> cut(n, 0);
  StepPath first;
  parallel_for(n, c.config.threads, [&](std::size_t i) {
    Engine rng = make_stream(c.config.master_seed, "discrete", i);
    StepPath path = simulate_population(params, rng);
    finals[i] = static_cast<double>(path.final_count());
    cut[i] = path.truncated;
    if (i == 0) first = std::move(path);
  });
  io::write_step_path(c.file("path.csv"), first);
  std::vector<double> kept;
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cut[i]) ++truncated;
    else kept.push_back(finals[i]);
  }
  io::write_samples(c.file("samples.csv"), kept);
  c.result.summary = json{{"final_count", moments_json(kept)}, {"truncated", truncated}};
  if (truncated) {
    c.result.partial = true;
    c.result.warnings.push_back(std::to_string(truncated) + " runs hit the event cap and were excluded");
  }
  c.result.verdict = Verdict::Pass;
}

void run_renormalized(Context& c) {
  const double x = c.p.nonnegative("x", 1.0);
  const auto N = c.p.integer("N", 50, 1);
  const double t_max = c.p.positive("t_max", 1.0);
  const auto points = static_cast<std::size_t>(c.p.integer("ledger_points", 100, 1));
  const auto cap = static_cast<std::uint64_t>(c.p.integer("max_events", 10'000'000, 1));
  const std::size_t n = c.replicates(1000);
  std::vector<double> finals(n);
  std::vector<double> predictable(n);
  std::vector<double> realized(n);
  std::vector<char> cut(n, 0);
  RenormalizedRun first;
  parallel_for(n, c.config.threads, [&](std::size_t i) {
    Engine rng = make_stream(c.config.master_seed, "renormalized", i);
    RenormalizedRun run = simulate_renormalized(x, N, c.config.f, t_max, rng, points, cap);
    finals[i] = static_cast<double>(run.path.final_count()) / static_cast<double>(N);
    predictable[i] = run.ledger.predictable.back();
    realized[i] = run.ledger.realized.back();
    cut[i] = run.path.truncated;
    if (i == 0) first = std::move(run);
  });
  io::write_step_path(c.file("path.csv"), first.path);
  io::write_ledger(c.file("ledger.csv"), first.ledger);
  std::vector<double> kz;
  std::vector<double> kp;
  std::vector<double> kr;
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cut[i]) {
      ++truncated;
      continue;
    }
    kz.push_back(finals[i]);
    kp.push_back(predictable[i]);
    kr.push_back(realized[i]);
  }
  io::write_samples(c.file("samples.csv"), kz);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < kp.size(); ++i) rows.push_back({static_cast<double>(i), kp[i], kr[i]});
  io::write_csv(c.file("brackets.csv"), {"replicate", "predictable", "realized"}, rows);

  bool pass = kz.size() >= 2;
  json summary{{"value", moments_json(kz)}, {"truncated", truncated}};
  if (pass) {
    const MomentReport mp = moment_report(kp);
    const MomentReport mr = moment_report(kr);
    const double se = std::hypot(mp.standard_error, mr.standard_error);
    const double sigma = c.p.positive("sigma", 3.0);
    const bool agree = std::abs(mp.mean - mr.mean) <= sigma * se;
    summary["bracket"] = json{{"predictable_mean", mp.mean}, {"realized_mean", mr.mean},
                              {"combined_se", se},           {"agree", agree}};
    pass = agree;
  }
  if (c.p.has("y")) {
    const double y = c.p.number("y", x);
    std::vector<double> sum(n);
    std::vector<double> direct(n);
    std::vector<char> monotone(n, 1);
    parallel_for(n, c.config.threads, [&](std::size_t i) {
      Engine rng = make_stream(c.config.master_seed, "coupled", i);
      const CoupledPair pair = simulate_coupled_pair(x, y, N, c.config.f, t_max, rng, cap);
      sum[i] = static_cast<double>(pair.lower.final_count() + pair.increment.final_count()) / static_cast<double>(N);
      for (std::int64_t v : pair.increment.counts)
        if (v < 0) monotone[i] = 0;
      Engine direct_rng = make_stream(c.config.master_seed, "direct", i);
      const StepPath d = simulate_population(renormalized_params(y, N, c.config.f, t_max), direct_rng);
      direct[i] = static_cast<double>(d.final_count()) / static_cast<double>(N);
    });
    const double ks = ks_two_sample(sum, direct);
    const double threshold = c.p.positive("threshold", 0.03);
    const bool mono = std::all_of(monotone.begin(), monotone.end(), [](char m) { return m != 0; });
    io::write_samples(c.file("coupled_sum.csv"), sum);
    io::write_samples(c.file("direct.csv"), direct);
    summary["coupling"] = json{{"ks", ks}, {"threshold", threshold}, {"monotone", mono}};
    pass = pass && ks < threshold && mono;
  }
  if (truncated) {
    c.result.partial = true;
    c.result.warnings.push_back(std::to_string(truncated) + " runs hit the event cap and were excluded");
  }
  c.result.summary = summary;
  c.result.verdict = pass ? Verdict::Pass : Verdict::Fail;
}

void run_forest(Context& c) {
  DiscreteParams params;
  params.lambda = c.p.nonnegative("lambda", 1.0);
  params.mu = c.p.nonnegative("mu", 1.0);
  params.f = c.config.f;
  params.m = c.p.integer("m", 1, 0);
  params.t_max = c.p.positive("t_max", 1.0);
  params.scale = c.p.integer("N", 1, 1);
  params.max_events = static_cast<std::uint64_t>(c.p.integer("max_events", 10'000'000, 1));
  const double p = c.p.positive("p", 2.0 * static_cast<double>(params.scale));
  const std::size_t n = c.replicates(100);
  std::vector<RayKnightReport> reports(n);
  std::vector<char> cut(n, 0);
  PlanarForest first;
  parallel_for(n, c.config.threads, [&](std::size_t i) {
    Engine rng = make_stream(c.config.master_seed, "forest", i);
    PlanarForest forest = grow_forest(params, rng);
    reports[i] = discrete_ray_knight_check(forest, p);
    cut[i] = forest.truncated;
    if (i == 0) first = std::move(forest);
  });
  const PolyPath path = explore(first, p);
  io::write_forest(c.file("forest.csv"), first);
  io::write_poly_path(c.file("exploration.csv"), path);

  const double step = c.p.positive("level_step", 0.01);
  std::vector<double> levels;
  for (double t = 0.5 * step; t < path.max_height(); t += step) levels.push_back(t);
  const LocalTimeProfile lt = local_time(path, path.duration(), levels, LocalTimeNormalization::HalfP);
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < levels.size(); ++j)
    rows.push_back({levels[j], lt.values[j], static_cast<double>(first.alive_at(levels[j]))});
  io::write_csv(c.file("local_time.csv"), {"level", "half_p_local_time", "alive"}, rows);

  double worst = 0.0;
  std::vector<std::vector<double>> check;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, reports[i].max_discrepancy);
    check.push_back({static_cast<double>(i), reports[i].max_discrepancy, static_cast<double>(reports[i].levels_checked)});
  }
  io::write_csv(c.file("ray_knight_check.csv"), {"replicate", "max_discrepancy", "levels_checked"}, check);
  const auto truncated = static_cast<std::size_t>(std::count(cut.begin(), cut.end(), 1));
  if (truncated) {
    c.result.partial = true;
    c.result.warnings.push_back(std::to_string(truncated) + " forests hit the event cap and were censored there");
  }
  c.result.summary = json{{"max_discrepancy", worst},
                          {"individuals_first", first.size()},
                          {"duration_first", path.duration()},
                          {"truncated", truncated}};
  c.result.verdict = worst == 0.0 ? Verdict::Pass : Verdict::Fail;
}

void run_diffusion(Context& c) {
  const std::string task = c.p.text("task", "marginal");
  const double x = c.p.nonnegative("x", 1.0);
  const double t_max = c.p.positive("t_max", 1.0);
  const double dt = c.p.positive("dt", 1e-3);
  const std::size_t n = c.replicates(1000);
  const auto seed = c.config.master_seed;
  const InteractionFunction& f = c.config.f;
  json summary{{"task", task}};
  Verdict verdict = Verdict::Pass;

  if (task == "marginal") {
    io::write_trajectory(c.file("trajectory.csv"), solve_feller(f, x, t_max, dt, derive_seed(seed, "path", 0)));
    const auto v = feller_marginal(f, x, t_max, dt, n, seed, c.config.threads);
    io::write_samples(c.file("samples.csv"), v);
    summary["value"] = moments_json(v);
  } else if (task == "environment") {
    const Trajectory env = Trajectory::constant(c.p.nonnegative("env_value", 0.0), t_max, dt);
    io::write_trajectory(c.file("trajectory.csv"),
                         solve_environment(f, x, env, t_max, dt, derive_seed(seed, "path", 0)));
    const auto v = environment_marginal(f, x, env, t_max, dt, n, seed, c.config.threads);
    io::write_samples(c.file("samples.csv"), v);
    summary["value"] = moments_json(v);
  } else if (task == "coupled") {
    const double y = c.p.number("y", x + 1.0);
    const CoupledTrajectories first = solve_coupled(f, x, y, t_max, dt, derive_seed(seed, "path", 0));
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < first.lower.values.size() && k < first.increment.values.size(); ++k)
      rows.push_back({dt * static_cast<double>(k), first.lower.values[k], first.increment.values[k]});
    io::write_csv(c.file("trajectory.csv"), {"t", "lower", "increment"}, rows);
    std::vector<double> sum(n);
    std::vector<char> ordered(n, 1);
    parallel_for(n, c.config.threads, [&](std::size_t i) {
      const CoupledTrajectories tr = solve_coupled(f, x, y, t_max, dt, derive_seed(seed, "coupled", i));
      sum[i] = tr.lower.final_value() + tr.increment.final_value();
      for (double v : tr.increment.values)
        if (v < 0.0) ordered[i] = 0;
    });
    const auto direct = feller_marginal(f, y, t_max, dt, n, seed, c.config.threads, "direct");
    io::write_samples(c.file("samples.csv"), sum);
    io::write_samples(c.file("direct.csv"), direct);
    const double ks = ks_two_sample(sum, direct);
    const double threshold = c.p.positive("threshold", 0.03);
    const bool mono = std::all_of(ordered.begin(), ordered.end(), [](char o) { return o != 0; });
    summary["ks"] = ks;
    summary["threshold"] = threshold;
    summary["monotone"] = mono;
    verdict = ks < threshold && mono ? Verdict::Pass : Verdict::Fail;
  } else if (task == "first_hit") {
    const double a = c.p.nonnegative("a", 0.0);
    const double b = c.p.number("b", 2.0 * x);
    const FirstHitReport r = first_hit(f, x, a, b, dt, n, seed, c.p.positive("t_cap", 20.0), c.config.threads);
    const double exact = hitting_probability(f, x, a, b);
    const double allowance = c.p.nonnegative("allowance", 0.02);
    const double err = std::abs(r.hit_lower_first.estimate - exact);
    summary["estimate"] = proportion_json(r.hit_lower_first);
    summary["quadrature"] = exact;
    summary["non_terminated"] = r.non_terminated;
    summary["allowance"] = allowance;
    if (!r.warning.empty()) c.result.warnings.push_back(r.warning);
    verdict = err <= 3.0 * r.hit_lower_first.standard_error + allowance ? Verdict::Pass : Verdict::Fail;
    io::write_csv(c.file("first_hit.csv"), {"estimate", "ci_low", "ci_high", "quadrature"},
                  {{r.hit_lower_first.estimate, r.hit_lower_first.ci_low, r.hit_lower_first.ci_high, exact}});
  } else {
    const ExtinctionReport r = extinction_stats(f, x, c.p.positive("t_cap", 20.0), dt, n, seed, c.config.threads);
    summary["extinct"] = proportion_json(r.extinct);
    summary["mean_total_mass"] = r.mean_total_mass;
    if (!r.warning.empty()) c.result.warnings.push_back(r.warning);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.total_masses.size(); ++i) rows.push_back({r.extinction_times[i], r.total_masses[i]});
    io::write_csv(c.file("extinction.csv"), {"extinction_time", "total_mass"}, rows);
  }
  c.result.summary = summary;
  c.result.verdict = verdict;
}

void run_rayknight(Context& c) {
  RKParams params;
  params.f = c.config.f;
  params.x_targets = c.p.numbers("x_targets", {1.0});
  params.ds = c.p.positive("ds", 1e-4);
  params.dh = c.p.positive("dh", 0.02);
  if (c.p.has("ceiling")) params.ceiling = c.p.positive("ceiling", 1.0);
  params.s_cap = c.p.nonnegative("s_cap", 0.0);
  const double env_value = c.p.nonnegative("env_value", 0.0);
  const double level = c.p.nonnegative("level", 0.5);
  const double dt = c.p.positive("dt", 1e-3);
  const std::size_t n = c.replicates(100);
  json meta;

  if (c.p.flag("calibrate", true)) {
    const CalibrationReport cal = calibrate_zero_local_time(
        params.ds, params.dh, c.p.positive("calibration_time", 10.0),
        static_cast<std::size_t>(c.p.integer("calibration_replicates", 200, 2)), c.config.master_seed,
        c.config.threads);
    params.calibration = cal.constant;
    meta["calibration"] = json{{"constant", cal.constant}, {"standard_error", cal.standard_error}};
  } else {
    params.calibration = c.p.positive("calibration", 2.0);
    meta["calibration"] = json{{"constant", params.calibration}};
  }
  // The environment is indexed by level; cover well past any reachable height.
  const double env_span = params.ceiling ? *params.ceiling : 50.0;
  if (env_value > 0.0) params.env = Trajectory::constant(env_value, env_span, params.dh);

  const RKEnsemble ens = ray_knight_field(params, n, c.config.master_seed, c.config.threads);
  io::write_field(c.file("field.csv"), params.x_targets, ens.runs.front().snapshots);
  std::vector<std::vector<double>> srows;
  for (std::size_t i = 0; i < ens.runs.size(); ++i)
    for (std::size_t k = 0; k < params.x_targets.size(); ++k)
      srows.push_back({static_cast<double>(i), params.x_targets[k],
                       ens.runs[i].truncated[k] ? -1.0 : ens.runs[i].s_values[k],
                       ens.runs[i].truncated[k] ? 1.0 : 0.0});
  io::write_csv(c.file("s_values.csv"), {"replicate", "x_target", "s_x", "truncated"}, srows);

  const auto samples = ens.field_samples(0, level);
  io::write_samples(c.file("samples.csv"), samples);
  const auto ref_n = static_cast<std::size_t>(c.p.integer("reference_replicates", 0, 0));
  const std::size_t m = ref_n ? ref_n : n;
  const double x = params.x_targets.front();
  std::vector<double> reference;
  if (env_value > 0.0) {
    reference = environment_marginal(c.config.f, x, Trajectory::constant(env_value, level, dt), level, dt, m,
                                     c.config.master_seed, c.config.threads, "rk-reference");
  } else {
    reference = feller_marginal(c.config.f, x, level, dt, m, c.config.master_seed, c.config.threads, "rk-reference");
  }
  io::write_samples(c.file("reference.csv"), reference);

  double worst_mass = 0.0;
  for (const ReflectedRun& r : ens.runs)
    for (std::size_t k = 0; k < r.snapshots.size(); ++k)
      worst_mass = std::max(worst_mass, total_mass_identity(r.snapshots[k], r.s_values[k]));
  const double threshold = c.p.positive("threshold", 0.05);
  const double ks = samples.empty() ? 1.0 : ks_two_sample(samples, reference);
  meta["ks"] = ks;
  meta["threshold"] = threshold;
  meta["level"] = level;
  meta["truncated_runs"] = ens.truncated_runs;
  meta["exclusion_rate"] = static_cast<double>(ens.truncated_runs) / static_cast<double>(n);
  meta["max_total_mass_discrepancy"] = worst_mass;
  meta["field"] = moments_json(samples);
  meta["reference"] = moments_json(reference);
  write_json(c.file("rk_meta.json"), meta);
  if (ens.truncated_runs) {
    c.result.partial = true;
    c.result.warnings.push_back(std::to_string(ens.truncated_runs) + " runs reached s_cap and were excluded");
  }
  c.result.summary = meta;
  c.result.verdict = ks < threshold ? Verdict::Pass : Verdict::Fail;
}

void run_convergence(Context& c) {
  const auto Ns = c.p.integers("N_list", {5, 20, 80});
  const ConvergenceTable table =
      convergence_experiment(c.config.f, c.p.nonnegative("x", 1.0), c.p.positive("t", 1.0), Ns,
                             c.p.positive("dt", 1e-3), c.replicates(1000), c.config.master_seed, c.config.threads);
  std::vector<std::vector<double>> rows;
  json jr = json::array();
  for (const ConvergenceRow& r : table.rows) {
    rows.push_back({static_cast<double>(r.N), r.mean, r.variance, r.ks_vs_limit, static_cast<double>(r.truncated)});
    jr.push_back(json{{"N", r.N}, {"mean", r.mean}, {"variance", r.variance}, {"ks_vs_limit", r.ks_vs_limit}});
  }
  io::write_csv(c.file("table.csv"), {"N", "mean", "variance", "ks_vs_limit", "truncated"}, rows);
  bool pass = table.rows.size() < 2 || table.rows.back().ks_vs_limit < table.rows.front().ks_vs_limit;
  if (c.p.has("threshold")) pass = pass && table.rows.back().ks_vs_limit < c.p.positive("threshold", 0.05);
  c.result.summary = json{{"rows", jr}, {"limit_mean", table.limit.mean}, {"limit_variance", table.limit.variance}};
  c.result.verdict = pass ? Verdict::Pass : Verdict::Fail;
}

void run_compare(Context& c) {
  const std::string column = c.p.text("column", "value");
  SampleSet a;
  SampleSet b;
  try {
    a = SampleSet(io::read_csv(c.p.text("a", "")).values(column), c.p.text("a", ""));
    b = SampleSet(io::read_csv(c.p.text("b", "")).values(column), c.p.text("b", ""));
  } catch (const std::out_of_range& e) {
    throw MissingArtifact(e.what());
  } catch (const std::runtime_error& e) {
    throw MissingArtifact(e.what());
  }
  const ComparisonReport r = compare(a, b, c.p.positive("threshold", 0.03));
  json out{{"ks_statistic", r.ks_statistic}, {"size_a", r.size_a},           {"size_b", r.size_b},
           {"mean_diff", r.mean_diff},       {"combined_se", r.combined_se}, {"threshold", r.threshold},
           {"verdict", to_string(r.verdict)}};
  io::write_csv(c.file("comparison.csv"), {"ks_statistic", "mean_diff", "combined_se", "threshold"},
                {{r.ks_statistic, r.mean_diff, r.combined_se, r.threshold}});
  write_json(c.file("comparison.json"), out);
  c.result.summary = out;
  c.result.verdict = r.verdict;
}

}  // namespace

std::string to_string(Model m) {
  for (const auto& [name, model] : model_names())
    if (model == m) return name;
  return "unknown";
}

Model model_from_string(const std::string& name) {
  const auto it = model_names().find(name);
  if (it == model_names().end()) throw ConfigError("unknown model '" + name + "'");
  return it->second;
}

InteractionFunction interaction_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("interaction needs a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  auto num = [&](const char* k, double def) {
    if (!j.contains(k)) return def;
    if (!j.at(k).is_number()) throw ConfigError(std::string("interaction.") + k + " must be a number");
    return j.at(k).get<double>();
  };
  const std::set<std::string> common{"kind", "derivative", "h", "beta"};
  auto with = [&](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    return extra;
  };
  try {
    InteractionFunction f = InteractionFunction::zero();
    if (kind == "zero") {
      reject_unknown(j, "interaction", with({}));
    } else if (kind == "logistic") {
      reject_unknown(j, "interaction", with({"theta", "gamma"}));
      f = InteractionFunction::logistic(num("theta", 1.0), num("gamma", 1.0));
    } else if (kind == "linear") {
      reject_unknown(j, "interaction", with({"theta"}));
      f = InteractionFunction::linear(num("theta", 1.0));
    } else if (kind == "custom") {
      reject_unknown(j, "interaction", with({"step", "values"}));
      if (!j.contains("values") || !j.at("values").is_array()) throw ConfigError("custom interaction needs 'values'");
      std::vector<double> values;
      for (const auto& v : j.at("values")) {
        if (!v.is_number()) throw ConfigError("custom interaction values must be numbers");
        values.push_back(v.get<double>());
      }
      f = InteractionFunction::custom(num("step", 0.1), values, num("beta", 0.0));
    } else if (kind == "csv") {
      reject_unknown(j, "interaction", with({"path"}));
      if (!j.contains("path") || !j.at("path").is_string()) throw ConfigError("csv interaction needs 'path'");
      f = InteractionFunction::from_csv(j.at("path").get<std::string>(), num("beta", 0.0));
    } else {
      throw ConfigError("unknown interaction kind '" + kind + "'");
    }
    if (j.contains("beta") && kind != "custom" && kind != "csv") f = f.with_beta(num("beta", f.beta()));
    if (j.contains("derivative")) {
      if (!j.at("derivative").is_string()) throw ConfigError("interaction.derivative must be a string");
      const std::string d = j.at("derivative").get<std::string>();
      if (d == "analytic") f = f.with_derivative(DerivativeMode::Analytic);
      else if (d == "central") f = f.with_derivative(DerivativeMode::CentralDifference, num("h", 1e-6));
      else if (d == "none") f = f.with_derivative(DerivativeMode::None);
      else throw ConfigError("interaction.derivative must be analytic, central or none");
    }
    return f;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("interaction: ") + e.what());
  }
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "config", {"model", "interaction", "params", "master_seed", "output_dir", "threads"});
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("model") || !j.at("model").is_string()) throw ConfigError("config needs a string 'model'");
  c.model = model_from_string(j.at("model").get<std::string>());
  c.f = j.contains("interaction") ? interaction_from_json(j.at("interaction")) : InteractionFunction::zero();
  if (j.contains("params")) c.params = j.at("params");
  reject_unknown(c.params, "params", allowed_params().at(c.model));
  validate_params(c.model, c.params);
  if (j.contains("master_seed")) {
    const json& s = j.at("master_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) throw ConfigError("master_seed must be a nonnegative integer");
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("threads")) {
    if (!j.at("threads").is_number_integer() || j.at("threads").get<std::int64_t>() < 1)
      throw ConfigError("threads must be a positive integer");
    c.threads = j.at("threads").get<unsigned>();
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig apply_overrides(const ExperimentConfig& config, const CliOverrides& o) {
  ExperimentConfig c = config;
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("--threads must be positive");
    c.threads = *o.threads;
  }
  if (o.replicates) {
    if (!allowed_params().at(c.model).count("replicates"))
      throw ConfigError("--replicates-override does not apply to model " + to_string(c.model));
    c.params["replicates"] = *o.replicates;
    validate_params(c.model, c.params);
  }
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.output_dir);
  Context ctx{config, Params(config.params), result};
  try {
    switch (config.model) {
      case Model::Classify: run_classify(ctx); break;
      case Model::Discrete: run_discrete(ctx); break;
      case Model::Renormalized: run_renormalized(ctx); break;
      case Model::Forest: run_forest(ctx); break;
      case Model::Diffusion: run_diffusion(ctx); break;
      case Model::RayKnight: run_rayknight(ctx); break;
      case Model::Convergence: run_convergence(ctx); break;
      case Model::Compare: run_compare(ctx); break;
    }
  } catch (const std::exception& e) {
    result.verdict = Verdict::Fail;
    result.partial = true;
    result.error = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest{{"model", to_string(config.model)},
                {"code_version", kCodeVersion},
                {"config", config.raw},
                {"effective",
                 json{{"master_seed", config.master_seed}, {"threads", config.threads}, {"params", config.params}}},
                {"interaction", config.f.describe()},
                {"wall_time_seconds", wall},
                {"verdict", to_string(result.verdict)},
                {"artifacts", result.artifacts},
                {"partial", result.partial},
                {"warnings", result.warnings},
                {"summary", result.summary}};
  if (!result.error.empty()) manifest["error"] = result.error;
  write_json(config.output_dir / "manifest.json", manifest);
  return result;
}

std::vector<fs::path> emit_plot_data(const fs::path& artifacts, const fs::path& out) {
  if (!fs::is_directory(artifacts)) throw MissingArtifact("artifact directory " + artifacts.string() + " not found");
  std::vector<fs::path> written;
  auto present = [&](const char* name) { return fs::exists(artifacts / name); };

  if (present("forest.csv") && present("exploration.csv")) {
    fs::create_directories(out);
    fs::copy_file(artifacts / "forest.csv", out / "figure_forest.csv", fs::copy_options::overwrite_existing);
    fs::copy_file(artifacts / "exploration.csv", out / "figure_exploration.csv",
                  fs::copy_options::overwrite_existing);
    written.push_back(out / "figure_forest.csv");
    written.push_back(out / "figure_exploration.csv");
    if (present("local_time.csv")) {
      fs::copy_file(artifacts / "local_time.csv", out / "figure_local_time.csv",
                    fs::copy_options::overwrite_existing);
      written.push_back(out / "figure_local_time.csv");
    }
  }
  if (present("field.csv") && present("samples.csv") && present("reference.csv") && present("rk_meta.json")) {
    fs::create_directories(out);
    fs::copy_file(artifacts / "field.csv", out / "figure_field_profile.csv", fs::copy_options::overwrite_existing);
    written.push_back(out / "figure_field_profile.csv");

    // Q-Q alignment: field quantiles at the checked level beside diffusion quantiles.
    std::ifstream meta_in(artifacts / "rk_meta.json");
    const double level = json::parse(meta_in).at("level").get<double>();
    std::vector<double> lt = io::read_csv(artifacts / "samples.csv").values("value");
    std::vector<double> ref = io::read_csv(artifacts / "reference.csv").values("value");
    if (lt.empty() || ref.empty()) throw MissingArtifact("field or reference samples are empty");
    std::sort(lt.begin(), lt.end());
    std::sort(ref.begin(), ref.end());
    auto quantile = [](const std::vector<double>& v, double q) {
      const auto i = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())));
      return v[i];
    };
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < 99; ++k) {
      const double q = (k + 1) / 100.0;
      rows.push_back({level, q, quantile(lt, q), quantile(ref, q)});
    }
    io::write_csv(out / "figure_local_time_vs_diffusion.csv",
                  {"level", "probability", "local_time", "diffusion_quantile"}, rows);
    written.push_back(out / "figure_local_time_vs_diffusion.csv");
  }
  if (present("table.csv")) {
    fs::create_directories(out);
    fs::copy_file(artifacts / "table.csv", out / "figure_convergence.csv", fs::copy_options::overwrite_existing);
    written.push_back(out / "figure_convergence.csv");
  }
  if (written.empty()) throw MissingArtifact("no plottable artifacts in " + artifacts.string());
  return written;
}

}  // namespace bpi
