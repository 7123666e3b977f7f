#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpi/errors.hpp"
#include "bpi/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::size_t> replicates;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "experiment config (JSON)")->required();
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--replicates-override", f.replicates, "replace params.replicates");
}

int run(const Flags& flags, const char* model) {
  try {
    std::ifstream in(flags.config);
    if (!in) throw bpi::ConfigError("cannot read config " + flags.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw bpi::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (model) {
      if (!j.is_object()) throw bpi::ConfigError("config must be an object");
      if (!j.contains("model")) j["model"] = model;
      else if (j["model"] != model)
        throw bpi::ConfigError("config model '" + j["model"].dump() + "' does not match subcommand (" + model + ")");
    }
    bpi::CliOverrides o;
    o.seed = flags.seed;
    if (flags.out) o.out = *flags.out;
    o.threads = flags.threads;
    o.replicates = flags.replicates;
    const bpi::ExperimentConfig config = bpi::apply_overrides(bpi::parse_config(j), o);

    const bpi::ExperimentResult r = bpi::run_experiment(config);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (!r.error.empty()) std::cerr << "error: " << r.error << '\n';
    std::cout << bpi::to_string(r.verdict) << ' ' << (config.output_dir / "manifest.json").string() << '\n';
    return r.verdict == bpi::Verdict::Pass ? 0 : 1;
  } catch (const bpi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting branching processes: simulation and checks"};
  app.require_subcommand(1);

  static const std::pair<const char*, const char*> commands[] = {
      {"classify", "classify"},           {"simulate-discrete", "discrete"},
      {"simulate-renormalized", "renormalized"}, {"explore-forest", "forest"},
      {"simulate-sde", "diffusion"},      {"ray-knight", "rayknight"},
      {"convergence", "convergence"},     {"compare", "compare"},
  };
  Flags flags;
  const char* chosen = nullptr;
  for (const auto& [name, model] : commands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run a ") + model + " experiment");
    add_flags(sub, flags);
    sub->callback([&chosen, m = model] { chosen = m; });
  }
  CLI::App* generic = app.add_subcommand("run", "run whatever model the config names");
  add_flags(generic, flags);

  std::string artifacts;
  std::string plots_out;
  CLI::App* plots = app.add_subcommand("emit-plots", "shape artifacts into figure CSVs");
  plots->add_option("--artifacts", artifacts, "experiment output directory")->required();
  plots->add_option("--out", plots_out, "where to write figure CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (plots->parsed()) {
    try {
      for (const auto& p : bpi::emit_plot_data(artifacts, plots_out)) std::cout << p.string() << '\n';
      return 0;
    } catch (const bpi::MissingArtifact& e) {
      std::cerr << "missing artifact: " << e.what() << '\n';
      return 1;
    }
  }
  return run(flags, chosen);
}
