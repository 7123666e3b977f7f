#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpi/analysis.hpp"
#include "bpi/interaction.hpp"

namespace bpi {

enum class Model { Classify, Discrete, Renormalized, Forest, Diffusion, RayKnight, Convergence, Compare };

std::string to_string(Model m);
/// Accepts the model names used in config files; ConfigError otherwise.
Model model_from_string(const std::string& name);

struct ExperimentConfig {
  Model model = Model::Classify;
  InteractionFunction f = InteractionFunction::zero();
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  nlohmann::json raw;  // echoed into the manifest
};

/// Builds an interaction from {"kind": ..., ...}; ConfigError on bad input.
InteractionFunction interaction_from_json(const nlohmann::json& j);

/// Validates every key and value; ConfigError on the first problem.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> threads;
  std::optional<std::size_t> replicates;
};

/// Applies command-line overrides, then re-validates.
ExperimentConfig apply_overrides(const ExperimentConfig& config, const CliOverrides& overrides);

struct ExperimentResult {
  Verdict verdict = Verdict::Fail;
  std::vector<std::string> artifacts;  // file names inside output_dir
  std::vector<std::string> warnings;
  bool partial = false;
  std::string error;
  nlohmann::json summary = nlohmann::json::object();
};

/// Runs the experiment, writes its artifacts and manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Shapes existing artifacts into figure-ready CSVs in `out`. Returns the
/// files written; MissingArtifact when nothing usable is found.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& artifacts,
                                                  const std::filesystem::path& out);

}  // namespace bpi
