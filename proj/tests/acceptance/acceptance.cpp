// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.
// Usage: bpi_acceptance <path-to-bpi_cli> [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bpi/analysis.hpp"
#include "bpi/diffusion.hpp"
#include "bpi/discrete.hpp"
#include "bpi/forest.hpp"
#include "bpi/interaction.hpp"
#include "bpi/rayknight.hpp"

using namespace bpi;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string cli_path;

// 1
Outcome discrete_ray_knight() {
  DiscreteParams p;
  p.lambda = p.mu = 1.0;
  p.f = InteractionFunction::logistic(1, 1);
  p.t_max = 5.0;
  double worst = 0.0;
  std::size_t levels = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    p.m = 1 + static_cast<std::int64_t>(i % 5);
    const RayKnightReport r = discrete_ray_knight_check(grow_forest(p, derive_seed(kSeed, "c1", i)), 2.0);
    worst = std::max(worst, r.max_discrepancy);
    levels += r.levels_checked;
  }
  return {worst == 0.0, "max discrepancy " + fmt("%g", worst) + " over " + std::to_string(levels) + " levels (== 0)"};
}

// 2
Outcome telescoping() {
  std::vector<double> table(1001);
  for (std::size_t k = 1; k < table.size(); ++k)
    table[k] = 0.25 * static_cast<double>((k * 37) % 11) - 0.5 * static_cast<double>(k % 3);
  const std::vector<std::pair<std::string, InteractionFunction>> fs{
      {"logistic", InteractionFunction::logistic(1, 1)},
      {"linear", InteractionFunction::linear(3)},
      {"custom", InteractionFunction::custom(1.0, table, 3.0)}};
  std::size_t bad = 0;
  for (const auto& [name, f] : fs)
    for (std::int64_t k = 1; k <= 1000; ++k) {
      const Rates r = total_rates(f, 1.5, 0.5, k);
      if (r.birth - r.death != (1.5 - 0.5) * static_cast<double>(k) + f(static_cast<double>(k))) ++bad;
    }
  return {bad == 0, std::to_string(bad) + " mismatches in 3000 (== 0)"};
}

// 3
Outcome forest_vs_chain() {
  DiscreteParams p;
  p.lambda = p.mu = 1.0;
  p.f = InteractionFunction::logistic(1, 1);
  p.m = 3;
  p.t_max = 1.0;
  std::vector<double> a;
  std::vector<double> b;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    a.push_back(static_cast<double>(population_path(grow_forest(p, derive_seed(kSeed, "c3-forest", i))).final_count()));
    Engine rng = make_stream(kSeed, "c3-chain", i);
    b.push_back(static_cast<double>(simulate_population(p, rng).final_count()));
  }
  const double ks = ks_two_sample(a, b);
  return {ks < 0.03, "KS " + fmt("%.4f", ks) + " (< 0.03)"};
}

// 4
Outcome coupling() {
  const auto f = InteractionFunction::logistic(1, 1);
  const std::int64_t N = 50;
  std::vector<double> sum;
  std::vector<double> direct;
  std::size_t violations = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    Engine rng = make_stream(kSeed, "c4-pair", i);
    const CoupledPair pair = simulate_coupled_pair(0.5, 1.0, N, f, 1.0, rng);
    sum.push_back(static_cast<double>(pair.lower.final_count() + pair.increment.final_count()) / N);
    if (pair.increment.initial < 0) ++violations;
    for (std::int64_t c : pair.increment.counts)
      if (c < 0) ++violations;
    Engine d = make_stream(kSeed, "c4-direct", i);
    direct.push_back(static_cast<double>(simulate_population(renormalized_params(1.0, N, f, 1.0), d).final_count()) / N);
  }
  const double ks = ks_two_sample(sum, direct);
  return {ks < 0.03 && violations == 0,
          "KS " + fmt("%.4f", ks) + " (< 0.03), ordering violations " + std::to_string(violations) + " (== 0)"};
}

// 5
Outcome bracket() {
  std::vector<double> pred;
  std::vector<double> real;
  std::vector<double> diff;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    Engine rng = make_stream(kSeed, "c5", i);
    const RenormalizedRun r = simulate_renormalized(1.0, 50, InteractionFunction::logistic(1, 1), 1.0, rng, 1);
    pred.push_back(r.ledger.predictable.back());
    real.push_back(r.ledger.realized.back());
    diff.push_back(real.back() - pred.back());
  }
  const MomentReport mp = moment_report(pred);
  const MomentReport mr = moment_report(real);
  const double se = std::hypot(mp.standard_error, mr.standard_error);
  const double gap = std::abs(mr.mean - mp.mean);
  return {gap <= 3.0 * se, "realized " + fmt("%.5f", mr.mean) + " predictable " + fmt("%.5f", mp.mean) + " gap " +
                               fmt("%.5f", gap) + " (<= 3 x " + fmt("%.5f", se) + "); paired SE " +
                               fmt("%.5f", moment_report(diff).standard_error)};
}

// 6
Outcome convergence() {
  bool pass = true;
  std::string detail;
  for (const auto& [name, f] : std::vector<std::pair<std::string, InteractionFunction>>{
           {"zero", InteractionFunction::zero()}, {"logistic", InteractionFunction::logistic(1, 1)}}) {
    const ConvergenceTable t = convergence_experiment(f, 1.0, 1.0, {5, 20, 80}, 1e-3, 10000, kSeed);
    const double first = t.rows.front().ks_vs_limit;
    const double last = t.rows.back().ks_vs_limit;
    pass = pass && last < first && last < 0.05;
    detail += name + ": KS";
    for (const auto& r : t.rows) detail += " N=" + std::to_string(r.N) + ":" + fmt("%.4f", r.ks_vs_limit);
    detail += "; ";
  }
  return {pass, detail + "(decreasing 5->80, < 0.05 at 80)"};
}

// 7
Outcome subcriticality() {
  const bool c1 = classify(InteractionFunction::logistic(1, 1)).classification == Criticality::Subcritical;
  const bool c2 = classify(InteractionFunction::zero()).classification == Criticality::Subcritical;
  const bool c3 = classify(InteractionFunction::linear(3)).classification == Criticality::Supercritical;
  const ExtinctionReport lo = extinction_stats(InteractionFunction::logistic(1, 1), 1.0, 20.0, 1e-3, 10000, kSeed);
  const ExtinctionReport li = extinction_stats(InteractionFunction::linear(3), 1.0, 10.0, 1e-3, 10000, kSeed);
  const double survive = 1.0 - li.extinct.estimate;
  return {c1 && c2 && c3 && lo.extinct.estimate > 0.99 && survive > 0.05,
          std::string("classes ") + (c1 && c2 && c3 ? "ok" : "WRONG") + ", logistic extinct " +
              fmt("%.4f", lo.extinct.estimate) + " (> 0.99), linear(3) survive " + fmt("%.4f", survive) + " (> 0.05)"};
}

// 8
Outcome hitting() {
  const FirstHitReport a = first_hit(InteractionFunction::zero(), 1.0, 0.0, 2.0, 1e-3, 10000, kSeed);
  const auto g = InteractionFunction::logistic(2, 1);
  const double exact = hitting_probability(g, 1.0, 0.5, 2.0);
  const FirstHitReport b = first_hit(g, 1.0, 0.5, 2.0, 1e-3, 10000, kSeed + 1);
  const double ea = std::abs(a.hit_lower_first.estimate - 0.5);
  const double eb = std::abs(b.hit_lower_first.estimate - exact);
  // same check at dt/4 shows which way the barrier bias goes
  const FirstHitReport a4 = first_hit(InteractionFunction::zero(), 1.0, 0.0, 2.0, 2.5e-4, 10000, kSeed);
  const double ta = 3.0 * a.hit_lower_first.standard_error + 0.02;
  const double tb = 3.0 * b.hit_lower_first.standard_error + 0.02;
  return {ea <= ta && eb <= tb && a.non_terminated == 0 && b.non_terminated == 0,
          "zero: " + fmt("%.4f", a.hit_lower_first.estimate) + " vs 0.5 err " + fmt("%.4f", ea) + " (<= " +
              fmt("%.4f", ta) + ", at dt/4 " + fmt("%.4f", a4.hit_lower_first.estimate) + "); logistic(2,1): " + fmt("%.4f", b.hit_lower_first.estimate) + " vs " +
              fmt("%.4f", exact) + " err " + fmt("%.4f", eb) + " (<= " + fmt("%.4f", tb) + ")"};
}

// 9
Outcome ray_knight() {
  const CalibrationReport cal = calibrate_zero_local_time(1e-4, 0.02, 10.0, 1000, kSeed);
  bool pass = true;
  std::string detail = "calibration " + fmt("%.4f", cal.constant) + " +- " + fmt("%.4f", cal.standard_error) + "; ";
  for (const auto& [name, f] : std::vector<std::pair<std::string, InteractionFunction>>{
           {"zero", InteractionFunction::zero()}, {"logistic", InteractionFunction::logistic(1, 1)}}) {
    RKParams p;
    p.f = f;
    p.calibration = cal.constant;
    if (name == "zero") {
      // the critical reflected walk has heavy-tailed return times; a far
      // ceiling keeps every run finite without touching level 0.5
      p.ceiling = 4.0;
      p.s_cap = 400.0;
    }
    p.ds = 1e-4;
    p.dh = 0.02;
    const RKEnsemble coarse = ray_knight_field(p, 5000, kSeed);
    const auto field = coarse.field_samples(0, 0.5);
    const auto ref = feller_marginal(f, 1.0, 0.5, 1e-3, 5000, kSeed, 1, "c9-ref");
    const double ks = ks_two_sample(field, ref);

    // halved grid on the same Brownian path, both against a large reference
    RKParams q = p;
    q.ds = 5e-5;
    q.dh = 0.01;
    RKParams pc = p;
    pc.noise_substeps = 2;
    const auto big = feller_marginal(f, 1.0, 0.5, 1e-3, 100000, kSeed, 1, "c9-big");
    const double ks_coarse = ks_two_sample(ray_knight_field(pc, 5000, kSeed + 9).field_samples(0, 0.5), big);
    const double ks_fine = ks_two_sample(ray_knight_field(q, 5000, kSeed + 9).field_samples(0, 0.5), big);
    pass = pass && ks < 0.05 && ks_fine < ks_coarse;
    detail += name + ": KS " + fmt("%.4f", ks) + " (< 0.05, excluded " + std::to_string(coarse.truncated_runs) +
              "), halving " + fmt("%.4f", ks_coarse) + " -> " + fmt("%.4f", ks_fine) + "; ";
  }
  return {pass, detail};
}

// 10
Outcome total_mass() {
  RKParams p;
  p.dh = 0.01;
  double worst = 0.0;
  std::size_t done = 0;
  std::size_t tried = 0;
  while (done < 100) {
    const ReflectedRun r = simulate_reflected(p, derive_seed(kSeed, "c10", tried++));
    if (!r.complete()) continue;
    worst = std::max(worst, total_mass_identity(r.snapshots[0], r.s_values[0]));
    ++done;
  }
  return {worst < 1e-3, "max relative discrepancy " + fmt("%.3g", worst) + " (< 1e-3) over " + std::to_string(done) +
                            " runs (" + std::to_string(tried - done) + " hit s_cap)"};
}

// 11
Outcome k_consistency() {
  RKParams p;
  p.s_cap = 400.0;
  p.ceiling = 2.0;
  const auto k2 = ray_knight_field(p, 5000, kSeed + 11).field_samples(0, 0.5);
  p.ceiling = 4.0;
  const auto k4 = ray_knight_field(p, 5000, kSeed + 12).field_samples(0, 0.5);
  const double ks_k = ks_two_sample(k2, k4);

  // pi^{a,b}: project a ceiling-b path below a, compare its maximum with a ceiling-a run
  const double a = 1.0;
  const double b = 2.0;
  std::vector<double> projected;
  std::vector<double> direct;
  RKParams q;
  q.s_cap = 400.0;
  q.record_path = true;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    q.ceiling = b;
    Engine rb = make_stream(kSeed, "c11-b", i);
    const ReflectedRun run_b = simulate_reflected(q, rb);
    const auto proj = excursion_projection(run_b.path, a, b);
    projected.push_back(proj.empty() ? 0.0 : *std::max_element(proj.begin(), proj.end()));
    q.ceiling = a;
    Engine ra = make_stream(kSeed, "c11-a", i);
    const ReflectedRun run_a = simulate_reflected(q, ra);
    direct.push_back(*std::max_element(run_a.path.begin(), run_a.path.end()));
  }
  const double ks_p = ks_two_sample(projected, direct);
  return {ks_k < 0.05 && ks_p < 0.05,
          "K=2 vs K=4 KS " + fmt("%.4f", ks_k) + " (< 0.05); projection KS " + fmt("%.4f", ks_p) + " (< 0.05)"};
}

// 12
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  if (cli_path.empty()) return {false, "no CLI path given"};
  const fs::path root = fs::temp_directory_path() / "bpi_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"classify", R"({"model":"classify","interaction":{"kind":"logistic","theta":1,"gamma":1}})"},
      {"simulate-discrete", R"({"model":"discrete","interaction":{"kind":"logistic"},"params":{"m":3,"replicates":200}})"},
      {"simulate-renormalized",
       R"({"model":"renormalized","interaction":{"kind":"logistic"},"params":{"N":20,"replicates":200,"y":1.5}})"},
      {"explore-forest", R"({"model":"forest","interaction":{"kind":"logistic"},"params":{"m":5,"replicates":50,"t_max":2}})"},
      {"simulate-sde", R"({"model":"diffusion","interaction":{"kind":"logistic"},"params":{"task":"coupled","replicates":200,"x":0.5,"y":1}})"},
      {"ray-knight", R"({"model":"rayknight","params":{"replicates":40,"ceiling":4,"s_cap":400,"calibration_replicates":10,"calibration_time":2}})"},
      {"convergence", R"({"model":"convergence","params":{"replicates":200,"dt":0.01}})"},
  };
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& [cmd, config] : runs) {
    const fs::path cfg = root / (cmd + ".json");
    std::ofstream(cfg) << config;
    for (const char* rep : {"a", "b"}) {
      const fs::path out = root / rep / cmd;
      const std::string line =
          "\"" + cli_path + "\" " + cmd + " --config \"" + cfg.string() + "\" --seed 7 --out \"" + out.string() + "\" > /dev/null 2>&1";
      const int rc = std::system(line.c_str());
      if (rc == -1 || WEXITSTATUS(rc) == 2) return {false, cmd + " failed to run"};
    }
    if (cmd != "explore-forest" && cmd != "ray-knight" && cmd != "convergence") continue;
    for (const char* rep : {"a", "b"}) {
      const std::string line = "\"" + cli_path + "\" emit-plots --artifacts \"" + (root / rep / cmd).string() +
                               "\" --out \"" + (root / rep / cmd / "plots").string() + "\" > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) differing.push_back(cmd + " plots");
    }
  }
  // compare also through the compare subcommand
  {
    const fs::path cfg = root / "compare.json";
    std::ofstream(cfg) << R"({"model":"compare","params":{"a":")" +
                              (root / "a" / "simulate-sde" / "samples.csv").string() + R"(","b":")" +
                              (root / "a" / "simulate-sde" / "direct.csv").string() + R"(","threshold":0.5}})";
    for (const char* rep : {"a", "b"}) {
      const std::string line = "\"" + cli_path + "\" compare --config \"" + cfg.string() + "\" --out \"" +
                               (root / rep / "compare").string() + "\" > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) differing.push_back("compare run");
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".csv" && entry.path().filename() != "classification.json") continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    ++files;
    if (!fs::exists(root / "b" / rel) || slurp(entry.path()) != slurp(root / "b" / rel)) differing.push_back(rel.string());
  }
  std::string detail = std::to_string(files) + " files compared, " + std::to_string(differing.size()) + " differ";
  for (const auto& d : differing) detail += " " + d;
  return {files >= 20 && differing.empty(), detail + " (all identical)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) cli_path = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"discrete Ray-Knight identity", discrete_ray_knight},
      {"telescoping rates", telescoping},
      {"forest and chain agree", forest_vs_chain},
      {"coupling consistency", coupling},
      {"martingale bracket", bracket},
      {"convergence in N", convergence},
      {"subcriticality", subcriticality},
      {"hitting law", hitting},
      {"local-time field law", ray_knight},
      {"total mass", total_mass},
      {"ceiling consistency and projection", k_consistency},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
