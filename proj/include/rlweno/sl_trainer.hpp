#pragma once

// Supervised baseline: the actor is trained by backpropagating a one-step
// windowed regression loss through the flux combination and an Euler step.
// Gradients never cross time steps.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlweno/mlp.hpp"
#include "rlweno/policy.hpp"
#include "rlweno/problems.hpp"
#include "rlweno/td3.hpp"

namespace rlweno {

struct SlConfig {
  double learning_rate = 1e-4;
  /// Number of training episodes.
  int iterations = 100;
  /// Cells whose window losses are accumulated per optimizer step
  /// (0 = the whole field, one step per time step).
  int batch_cells = 0;
  /// Held-out evaluation cadence in episodes (0 = only at the end).
  int eval_every = 10;
  /// Build the next state from the reference instead of the evolved field.
  bool teacher_forcing = false;
  double cfl_limit = 1.0;
  double time_budget_seconds = 0.0;
  int max_consecutive_blowups = 500;

  void validate() const;
  bool operator==(const SlConfig&) const = default;
};

struct SlSeeds {
  std::uint64_t init = 1;
  std::uint64_t episodes = 4;
};

struct SlLoss {
  double loss = 0.0;
  GradientSet gradients;
};

/// Sum over the listed cells j of ||U'_{j-3..j+3} - u_{j-3..j+3}||^2 where U'
/// is one Euler step of `field` at time `t` with the actor's weights. Returns
/// nullopt when the evolved values are non-finite.
std::optional<SlLoss> sl_cells_loss(const MlpParams& actor, std::span<const double> field, double t,
                                    std::span<const int> cells, const ProblemInstance& problem,
                                    std::span<const double> reference_next);

/// Single-cell form of sl_cells_loss.
std::optional<SlLoss> sl_step_loss(const MlpParams& actor, std::span<const double> field, double t, int cell,
                                   const ProblemInstance& problem, std::span<const double> reference_next);

/// One Euler step of the whole field with the actor's weights.
std::vector<double> sl_evolve_step(const MlpParams& actor, std::span<const double> field, double t,
                                   const ProblemInstance& problem);

struct SlLogRow {
  int episode = 0;
  std::int64_t steps = 0;      // cumulative time steps
  double mean_loss = 0.0;      // mean one-step window loss over the episode
  double eval_relative_error = 0.0;  // NaN when not evaluated
  double wall_time = 0.0;
  int skipped = 0;             // samples dropped because the step blew up
};

std::string sl_log_csv(const std::vector<SlLogRow>& rows);

struct SlResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<SlLogRow> log;
  double best_eval_error = 0.0;
  std::int64_t skipped = 0;
};

SlResult sl_train(EpisodeSampler& sampler, const SlConfig& cfg, const SlSeeds& seeds,
                  const ActorEvaluator& evaluator = {},
                  const std::function<void(const SlLogRow&)>& on_episode = {});

}  // namespace rlweno
