#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bpi/diffusion.hpp"
#include "bpi/errors.hpp"
#include "bpi/experiment.hpp"
#include "bpi/io.hpp"

using namespace bpi;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bpi_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config(json{{"model", "diffusion"}, {"params", {{"dt", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", "diffusion"}, {"colour", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", "forest"}, {"params", {{"ds", 1e-4}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", "nope"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", "classify"}, {"interaction", {{"kind", "cubic"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", "classify"}, {"interaction", {{"kind", "linear"}, {"gamma", 1}}}}),
                  ConfigError);
  const ExperimentConfig c = parse_config(
      json{{"model", "rayknight"}, {"interaction", {{"kind", "logistic"}, {"theta", 2}, {"gamma", 1}}}, {"master_seed", 9}});
  CHECK(c.model == Model::RayKnight);
  CHECK(c.f(2.0) == 0.0);
  CHECK(c.master_seed == 9);
}

TEST_CASE("overrides") {
  const ExperimentConfig c = parse_config(json{{"model", "discrete"}});
  CliOverrides o;
  o.seed = 5;
  o.replicates = 7;
  const ExperimentConfig d = apply_overrides(c, o);
  CHECK(d.master_seed == 5);
  CHECK(d.params["replicates"] == 7);
  CliOverrides bad;
  bad.replicates = 3;
  CHECK_THROWS_AS(apply_overrides(parse_config(json{{"model", "classify"}}), bad), ConfigError);
}

TEST_CASE("csv round trip") {
  const fs::path dir = scratch("csv");
  io::write_csv(dir / "t.csv", {"a", "b"}, {{0.1, 1e-300}, {1.0 / 3.0, -2.5}});
  const io::CsvTable t = io::read_csv(dir / "t.csv");
  CHECK(t.values("a")[1] == 1.0 / 3.0);
  CHECK(t.values("b")[0] == 1e-300);
  CHECK_THROWS_AS(t.column("c"), std::out_of_range);
}

TEST_CASE("classify run writes a manifest") {
  const fs::path dir = scratch("classify");
  ExperimentConfig c = parse_config(
      json{{"model", "classify"}, {"interaction", {{"kind", "logistic"}, {"theta", 1}, {"gamma", 1}}}});
  c.output_dir = dir;
  const ExperimentResult r = run_experiment(c);
  CHECK(r.verdict == Verdict::Pass);
  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["summary"]["classification"] == "Subcritical");
  CHECK(m.contains("code_version"));
  CHECK(m.contains("wall_time_seconds"));
}

TEST_CASE("convergence run produces one row per N") {
  const fs::path dir = scratch("conv");
  ExperimentConfig c = parse_config(
      json{{"model", "convergence"}, {"params", {{"N_list", {5, 20, 80}}, {"replicates", 200}, {"dt", 1e-2}}}});
  c.output_dir = dir;
  run_experiment(c);
  CHECK(io::read_csv(dir / "table.csv").rows.size() == 3);
}

TEST_CASE("forest runs feed the plot data, empty directories do not") {
  const fs::path dir = scratch("forest");
  ExperimentConfig c = parse_config(json{{"model", "forest"},
                                         {"interaction", {{"kind", "logistic"}}},
                                         {"params", {{"m", 5}, {"replicates", 5}, {"t_max", 2.0}}}});
  c.output_dir = dir / "run";
  CHECK(run_experiment(c).verdict == Verdict::Pass);
  const auto files = emit_plot_data(dir / "run", dir / "plots");
  CHECK(fs::exists(dir / "plots" / "figure_forest.csv"));
  CHECK(fs::exists(dir / "plots" / "figure_exploration.csv"));
  fs::create_directories(dir / "empty");
  CHECK_THROWS_AS(emit_plot_data(dir / "empty", dir / "p2"), MissingArtifact);
}

TEST_CASE("reruns are byte identical, also across thread counts") {
  const fs::path dir = scratch("det");
  const json j{{"model", "diffusion"}, {"params", {{"replicates", 50}, {"dt", 1e-2}}}};
  ExperimentConfig a = parse_config(j);
  a.output_dir = dir / "a";
  ExperimentConfig b = a;
  b.output_dir = dir / "b";
  b.threads = 3;
  run_experiment(a);
  run_experiment(b);
  CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
  CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
  CHECK(feller_marginal(InteractionFunction::zero(), 1.0, 0.5, 1e-2, 40, 1, 1) ==
        feller_marginal(InteractionFunction::zero(), 1.0, 0.5, 1e-2, 40, 1, 4));
}

TEST_CASE("runtime failures land in the manifest") {
  const fs::path dir = scratch("fail");
  ExperimentConfig c = parse_config(json{{"model", "compare"}, {"params", {{"a", "/nonexistent.csv"}, {"b", "/x.csv"}}}});
  c.output_dir = dir;
  const ExperimentResult r = run_experiment(c);
  CHECK(r.verdict == Verdict::Fail);
  CHECK_FALSE(r.error.empty());
  CHECK(json::parse(slurp(dir / "manifest.json"))["partial"] == true);
}

}
