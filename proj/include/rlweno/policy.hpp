#pragma once

// Actor and critic networks built on the MLP primitives.
//
// The actor is one 7 -> 64x6 -> 4 subnet shared by both interfaces of a
// cell; a softmax head turns its logits into stencil weights. Before the
// subnet, each interface state is normalised: the six window fluxes are
// centred on their mean and divided by their largest deviation, and the Roe
// speed passes through tanh. WENO weights are (up to epsilon) invariant to
// exactly these transformations, so the subnet sees O(1) inputs whatever the
// flux function or amplitude.

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rlweno/mdp_env.hpp"
#include "rlweno/mlp.hpp"

namespace rlweno {

inline constexpr int kInterfaceFeatures = 7;
inline constexpr int kCellFeatures = 14;
inline constexpr int kActionSize = 8;
inline constexpr int kHiddenWidth = 64;
inline constexpr int kHiddenLayers = 6;

std::vector<int> actor_layer_sizes();
std::vector<int> critic_layer_sizes();

Eigen::Matrix<double, kInterfaceFeatures, 1> interface_features(const InterfaceState& state);
/// Critic view of an interface: asinh of the raw state. Unlike the actor's
/// features it keeps the amplitude, which values depend on.
Eigen::Matrix<double, kInterfaceFeatures, 1> critic_features(const InterfaceState& state);

/// 7 x B feature matrix, one column per interface state.
Eigen::MatrixXd feature_matrix(std::span<const InterfaceState> states);

/// 4 x B logits for a batch of interface states.
Eigen::MatrixXd actor_logits(const MlpParams& actor, std::span<const InterfaceState> states);

/// Runs the shared subnet on both halves and applies the softmax head.
WeightAction actor_act(const MlpParams& actor, const CellState& state);

/// 22 x B critic input: critic features of left and right halves, then the action.
Eigen::MatrixXd critic_input(std::span<const CellState> states, std::span<const WeightAction> actions);
/// Same, but with the action block given as an 8 x B matrix.
Eigen::MatrixXd critic_input(std::span<const CellState> states, const Eigen::MatrixXd& actions);

/// Deterministic actor policy for solving and evaluation.
class ActorPolicy final : public FluxPolicy {
 public:
  explicit ActorPolicy(const MlpParams& actor) : actor_(&actor) {}
  void act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) override;

 private:
  const MlpParams* actor_;
};

/// Actor with Gaussian noise on the logits, drawn once per interface.
class NoisyActorPolicy final : public FluxPolicy {
 public:
  NoisyActorPolicy(const MlpParams& actor, double noise_std, std::uint64_t seed)
      : actor_(&actor), noise_std_(noise_std), rng_(seed) {}
  void act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) override;
  std::mt19937_64& rng() { return rng_; }

 private:
  const MlpParams* actor_;
  double noise_std_;
  std::mt19937_64 rng_;
};

/// Uniform draws from the 4-simplex (flat Dirichlet), one per interface.
class RandomSimplexPolicy final : public FluxPolicy {
 public:
  explicit RandomSimplexPolicy(std::uint64_t seed) : rng_(seed) {}
  void act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) override;
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

SimplexBlock uniform_simplex_sample(std::mt19937_64& rng);

struct Checkpoint {
  MlpParams params;
  std::string method = "td3";
  std::uint64_t seed = 0;
  std::int64_t training_steps = 0;
  nlohmann::json extra = nlohmann::json::object();
};

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json params_to_json(const MlpParams& params);
MlpParams params_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlweno
