#pragma once

// Experiment configuration: a versioned JSON schema with unknown-key
// rejection, field-path diagnostics and a stable content hash.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rlweno/eval.hpp"
#include "rlweno/problems.hpp"
#include "rlweno/reference.hpp"
#include "rlweno/sl_trainer.hpp"
#include "rlweno/td3.hpp"

namespace rlweno {

inline constexpr int kConfigVersion = 1;

/// Every violation found while parsing, one "path: message" entry each.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Independent seed streams so that changing one does not perturb the others.
struct SeedStreams {
  std::uint64_t init = 1;
  std::uint64_t ic = 0;
  std::uint64_t forcing = 0;
  std::uint64_t buffer = 2;
  std::uint64_t noise = 3;
  std::uint64_t episodes = 4;
  bool operator==(const SeedStreams&) const = default;
};

struct TrainSection {
  std::vector<GridSpec> grids{{0.02, 0.002}, {0.04, 0.004}};
  double eta = 0.0;
  std::vector<int> c{8};
  std::vector<std::uint64_t> seeds;
  /// Held-out instances (test c choices, test horizon) used to pick the best
  /// checkpoint during training.
  std::vector<std::uint64_t> validation_seeds;
  double t_min = 0.25;
  double t_max = 1.0;
  Integrator integrator = Integrator::euler;
  bool operator==(const TrainSection&) const = default;
};

struct TestSection {
  std::vector<GridSpec> grids{{0.02, 0.002}, {0.04, 0.004}, {0.05, 0.005}};
  std::vector<double> eta{0.0};
  std::vector<int> c{4, 6};
  std::vector<std::uint64_t> seeds;
  double terminal_time = 0.9;
  Integrator integrator = Integrator::rk4;
  bool operator==(const TestSection&) const = default;
};

struct EvalSection {
  std::vector<std::string> methods{"weno"};
  double singular_threshold = 10.0;
  int halo = 2;
  int repetitions = 20;
  double cfl_limit = 1.0;
  double cdf_bin_width = 0.1;
  /// Roe-speed magnitude above which upwinding of learned weights is checked.
  double upwind_roe_threshold = 0.5;
  bool operator==(const EvalSection&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  Setting setting = Setting::inviscid;
  FluxFunction flux;
  TrainSection train;
  TestSection test;
  /// td3, sl or weno.
  std::string method = "td3";
  Td3Config td3;
  SlConfig sl;
  EvalSection eval;
  ReferenceOptions reference;
  /// Method tag -> checkpoint path.
  std::map<std::string, std::string> checkpoints;
  std::string out_dir = "out";
  SeedStreams seeds;

  /// Family used for training (train c, train eta) and testing (test c, eta).
  ProblemFamily train_family() const;
  ProblemFamily test_family(double eta) const;
  /// Grid spacings and times in domain units (scaled by pi for forcing).
  GridSpec domain_grid(const GridSpec& g) const;
  double domain_time(double t) const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Defaults for a setting: train seeds 0..24, test seeds 1000..1024, and the
/// setting's eta lists and c choices.
ExperimentConfig default_config(Setting setting = Setting::inviscid);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Overrides seed lists from {"train": [...], "test": [...]}.
void apply_seed_file(ExperimentConfig& config, const std::filesystem::path& path);

/// 16 hex digits of the 64-bit FNV-1a hash.
std::string fnv1a_hex(std::string_view text);

/// 16 hex digits of FNV-1a over the canonical JSON serialization.
std::string config_hash(const ExperimentConfig& config);

}  // namespace rlweno
