#pragma once

// Twin Delayed DDPG over the per-cell decision process: replay buffer, twin
// critics with target policy smoothing, delayed actor updates and Polyak
// target tracking.

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rlweno/mdp_env.hpp"
#include "rlweno/mlp.hpp"
#include "rlweno/policy.hpp"
#include "rlweno/problems.hpp"

namespace rlweno {

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return storage_.size(); }
  std::uint64_t pushed() const { return pushed_; }
  /// Oldest-first access, i in [0, size()).
  const Transition& at(std::size_t i) const;
  /// `count` transitions drawn uniformly with replacement.
  std::vector<const Transition*> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

struct Td3Config {
  // gamma, actor_lr, exploration_noise and reward_scale are tuned for this
  // problem: with the generic 0.99 / 3e-4 / 0.1 / 1 the actor saturates onto
  // single stencils before the critic is informative and never stops blowing up.
  double gamma = 0.9;
  double tau = 0.005;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
  int batch_size = 256;
  double actor_lr = 1e-5;
  double critic_lr = 3e-4;
  double exploration_noise = 0.3;
  std::size_t buffer_capacity = 1'000'000;
  /// Training stops once this many transitions have been collected.
  std::int64_t total_steps = 200'000;
  /// Transitions collected with uniformly random simplex actions first.
  std::int64_t warmup_steps = 5'000;
  /// Gradient updates per solver time step (each step yields J transitions).
  int updates_per_env_step = 1;
  double reward_scale = 10.0;
  /// Held-out evaluation cadence in episodes (0 = only at the end).
  int eval_every = 10;
  int max_consecutive_blowups = 500;
  /// Optional wall-clock budget in seconds (0 = unlimited).
  double time_budget_seconds = 0.0;
  /// Time stepping of training episodes (RK4 holds weights over stages).
  Integrator integrator = Integrator::euler;

  void validate() const;
  bool operator==(const Td3Config&) const = default;
};

struct Td3Seeds {
  std::uint64_t init = 1;
  std::uint64_t buffer = 2;
  std::uint64_t noise = 3;
  std::uint64_t episodes = 4;
};

struct Td3State {
  MlpParams actor, actor_target;
  MlpParams critic1, critic2, critic1_target, critic2_target;
  Adam actor_opt, critic1_opt, critic2_opt;
  std::int64_t critic_updates = 0;
  std::int64_t actor_updates = 0;
  std::mt19937_64 rng;  // target-smoothing noise
};

Td3State make_td3_state(const Td3Config& cfg, const Td3Seeds& seeds);

using Batch = std::vector<const Transition*>;

/// y = r + (1 - done) * gamma * min(Q1', Q2')(s', smoothed target action).
Eigen::VectorXd critic_target(const Batch& batch, Td3State& state, const Td3Config& cfg);

/// One Adam step on both critics towards the shared target; returns the
/// pre-step loss MSE(Q1, y) + MSE(Q2, y).
double update_critics(Td3State& state, const Batch& batch, const Td3Config& cfg);

/// Deterministic policy gradient step on the actor through Q1, then Polyak
/// updates of all three target networks.
void update_actor_and_targets(Td3State& state, const Batch& batch, const Td3Config& cfg);

/// One critic update plus, every policy_delay critic updates, an actor update.
double td3_update(Td3State& state, const Batch& batch, const Td3Config& cfg);

struct TrainingLogRow {
  int episode = 0;
  std::int64_t steps = 0;  // cumulative transitions
  double mean_reward = 0.0;
  double eval_relative_error = 0.0;  // NaN when not evaluated this episode
  double wall_time = 0.0;
  bool blew_up = false;
};

std::string training_log_csv(const std::vector<TrainingLogRow>& rows);

/// Held-out evaluation: mean relative error (NaN or inf on blow-up).
using ActorEvaluator = std::function<double(const MlpParams& actor)>;

struct TrainResult {
  Checkpoint best;   // lowest evaluation error (final actor if never evaluated)
  Checkpoint last;
  std::vector<TrainingLogRow> log;
  double best_eval_error = 0.0;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TrainResult train(EpisodeSampler& sampler, const Td3Config& cfg, const Td3Seeds& seeds,
                  const ActorEvaluator& evaluator = {},
                  const std::function<void(const TrainingLogRow&)>& on_episode = {});

}  // namespace rlweno
