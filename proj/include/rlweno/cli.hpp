#pragma once

// Command-line entry point and the experiment plumbing it shares with the
// acceptance checks: instance sets, evaluators and artifact sidecars.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rlweno/config.hpp"
#include "rlweno/eval.hpp"

namespace rlweno {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Test instances for one eta and one (unscaled) grid of the config.
std::vector<Instance> test_instances(const ExperimentConfig& config, double eta, const GridSpec& grid, int workers = 1);

/// Held-out validation instances on every training grid.
std::vector<Instance> validation_instances(const ExperimentConfig& config, int workers = 1);

/// Mean relative error of an actor over validation instances (inf on any
/// blow-up), using the test integrator.
ActorEvaluator make_evaluator(const ExperimentConfig& config, std::vector<Instance> instances);

EpisodeSampler make_sampler(const ExperimentConfig& config);

/// Method tag plus its checkpoint, or classical WENO for "weno".
Method load_method(const ExperimentConfig& config, const std::string& tag);

/// Writes `csv` to `path` and a `path.meta.json` sidecar holding the config
/// hash, seeds and `extra`.
void write_artifact(const std::filesystem::path& path, const std::string& csv, const ExperimentConfig& config,
                    const nlohmann::json& extra = nlohmann::json::object());

/// Parses argv and dispatches to a subcommand. Diagnostics go to stderr.
int run_subcommand(const std::vector<std::string>& args);
int run_subcommand(int argc, char** argv);

}  // namespace rlweno
