#include "rlweno/td3.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rlweno {

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
  storage_.resize(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  storage_[head_] = t;
  head_ = (head_ + 1) % storage_.size();
  size_ = std::min(size_ + 1, storage_.size());
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay buffer: index out of range");
  const std::size_t oldest = size_ < storage_.size() ? 0 : head_;
  return storage_[(oldest + i) % storage_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  if (size_ == 0) throw ContractError("replay buffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<const Transition*> out(count);
  for (auto& p : out) p = &storage_[pick(rng)];
  return out;
}

void Td3Config::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("td3.gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("td3.tau must lie in (0, 1]");
  if (policy_delay < 1) throw ConfigError("td3.policy_delay must be >= 1");
  if (batch_size < 1) throw ConfigError("td3.batch_size must be >= 1");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("td3 learning rates must be positive");
  if (policy_noise < 0.0 || noise_clip < 0.0 || exploration_noise < 0.0) {
    throw ConfigError("td3 noise scales must be >= 0");
  }
  if (buffer_capacity == 0) throw ConfigError("td3.buffer_capacity must be positive");
  if (total_steps < 0 || warmup_steps < 0) throw ConfigError("td3 step counts must be >= 0");
  if (updates_per_env_step < 0) throw ConfigError("td3.updates_per_env_step must be >= 0");
  if (!(reward_scale > 0.0)) throw ConfigError("td3.reward_scale must be positive");
  if (eval_every < 0) throw ConfigError("td3.eval_every must be >= 0");
  if (max_consecutive_blowups < 1) throw ConfigError("td3.max_consecutive_blowups must be >= 1");
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<CellState> states_of(const Batch& batch, bool next) {
  std::vector<CellState> s(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) s[i] = next ? batch[i]->next_state : batch[i]->state;
  return s;
}

// Left halves in columns [0, B), right halves in [B, 2B).
std::vector<InterfaceState> halves_of(std::span<const CellState> cells) {
  std::vector<InterfaceState> out(2 * cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out[i] = cells[i].left;
    out[cells.size() + i] = cells[i].right;
  }
  return out;
}

// 4 x 2B probabilities -> 8 x B action matrix.
Eigen::MatrixXd stack_actions(const Eigen::MatrixXd& probs) {
  const Eigen::Index b = probs.cols() / 2;
  Eigen::MatrixXd a(kActionSize, b);
  a.topRows(4) = probs.leftCols(b);
  a.bottomRows(4) = probs.rightCols(b);
  return a;
}

Eigen::MatrixXd unstack_actions(const Eigen::MatrixXd& grad_actions) {
  const Eigen::Index b = grad_actions.cols();
  Eigen::MatrixXd g(4, 2 * b);
  g.leftCols(b) = grad_actions.topRows(4);
  g.rightCols(b) = grad_actions.bottomRows(4);
  return g;
}

}  // namespace

Td3State make_td3_state(const Td3Config& cfg, const Td3Seeds& seeds) {
  cfg.validate();
  Td3State s;
  const auto actor_sizes = actor_layer_sizes();
  const auto critic_sizes = critic_layer_sizes();
  s.actor = init_params(mix(seeds.init), actor_sizes);
  s.critic1 = init_params(mix(seeds.init + 1), critic_sizes);
  s.critic2 = init_params(mix(seeds.init + 2), critic_sizes);
  s.actor_target = s.actor;
  s.critic1_target = s.critic1;
  s.critic2_target = s.critic2;
  s.actor_opt = Adam(s.actor, cfg.actor_lr);
  s.critic1_opt = Adam(s.critic1, cfg.critic_lr);
  s.critic2_opt = Adam(s.critic2, cfg.critic_lr);
  s.rng.seed(mix(seeds.noise + 17));
  return s;
}

Eigen::VectorXd critic_target(const Batch& batch, Td3State& state, const Td3Config& cfg) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::VectorXd y(b);
  for (Eigen::Index i = 0; i < b; ++i) y[i] = cfg.reward_scale * batch[i]->reward;
  if (cfg.gamma == 0.0) return y;

  const auto next = states_of(batch, true);
  Eigen::MatrixXd logits = actor_logits(state.actor_target, halves_of(next));
  if (cfg.policy_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.policy_noise);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        logits(r, c) += std::clamp(noise(state.rng), -cfg.noise_clip, cfg.noise_clip);
      }
    }
  }
  const Eigen::MatrixXd x = critic_input(next, stack_actions(softmax_columns(logits)));
  const Eigen::MatrixXd q1 = forward(state.critic1_target, x);
  const Eigen::MatrixXd q2 = forward(state.critic2_target, x);
  for (Eigen::Index i = 0; i < b; ++i) {
    if (!batch[i]->done) y[i] += cfg.gamma * std::min(q1(0, i), q2(0, i));
  }
  return y;
}

double update_critics(Td3State& state, const Batch& batch, const Td3Config& cfg) {
  const Eigen::VectorXd y = critic_target(batch, state, cfg);
  const auto current = states_of(batch, false);
  std::vector<WeightAction> actions(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) actions[i] = batch[i]->action;
  const Eigen::MatrixXd x = critic_input(current, actions);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  double loss = 0.0;
  auto fit = [&](MlpParams& critic, Adam& opt) {
    ForwardCache cache;
    const Eigen::MatrixXd q = forward(critic, x, &cache);
    const Eigen::RowVectorXd diff = q.row(0) - y.transpose();
    loss += diff.squaredNorm() * inv_b;
    const BackwardResult g = backward(critic, cache, 2.0 * inv_b * diff);
    opt.step(critic, g.gradients);
  };
  fit(state.critic1, state.critic1_opt);
  fit(state.critic2, state.critic2_opt);
  ++state.critic_updates;
  if (!std::isfinite(loss)) throw TrainingAborted("critic loss became non-finite");
  return loss;
}

void update_actor_and_targets(Td3State& state, const Batch& batch, const Td3Config& cfg) {
  const auto current = states_of(batch, false);
  const auto halves = halves_of(current);
  ForwardCache actor_cache;
  const Eigen::MatrixXd logits = forward(state.actor, feature_matrix(halves), &actor_cache);
  const Eigen::MatrixXd probs = softmax_columns(logits);

  ForwardCache critic_cache;
  const Eigen::MatrixXd x = critic_input(current, stack_actions(probs));
  const Eigen::MatrixXd q = forward(state.critic1, x, &critic_cache);
  // Minimise -mean(Q1).
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / static_cast<double>(q.cols()));
  const BackwardResult critic_grad = backward(state.critic1, critic_cache, dq);
  const Eigen::MatrixXd grad_actions = critic_grad.input_gradient.bottomRows(kActionSize);
  const Eigen::MatrixXd grad_logits = softmax_backward(probs, unstack_actions(grad_actions));
  const BackwardResult actor_grad = backward(state.actor, actor_cache, grad_logits);
  state.actor_opt.step(state.actor, actor_grad.gradients);
  ++state.actor_updates;

  soft_update(state.actor_target, state.actor, cfg.tau);
  soft_update(state.critic1_target, state.critic1, cfg.tau);
  soft_update(state.critic2_target, state.critic2, cfg.tau);
}

double td3_update(Td3State& state, const Batch& batch, const Td3Config& cfg) {
  const double loss = update_critics(state, batch, cfg);
  if (state.critic_updates % cfg.policy_delay == 0) update_actor_and_targets(state, batch, cfg);
  return loss;
}

std::string training_log_csv(const std::vector<TrainingLogRow>& rows) {
  std::ostringstream out;
  out << "episode,steps,mean_reward,eval_relative_error,wall_time,blew_up\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.episode << ',' << r.steps << ',' << r.mean_reward << ',';
    if (std::isnan(r.eval_relative_error)) {
      out << "";
    } else {
      out << r.eval_relative_error;
    }
    out << ',' << std::setprecision(4) << r.wall_time << std::setprecision(10) << ',' << (r.blew_up ? 1 : 0) << '\n';
  }
  return out.str();
}

TrainResult train(EpisodeSampler& sampler, const Td3Config& cfg, const Td3Seeds& seeds,
                  const ActorEvaluator& evaluator, const std::function<void(const TrainingLogRow&)>& on_episode) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  Td3State state = make_td3_state(cfg, seeds);
  ReplayBuffer buffer(cfg.buffer_capacity);
  std::mt19937_64 buffer_rng(mix(seeds.buffer));
  std::mt19937_64 episode_rng(mix(seeds.episodes));
  RandomSimplexPolicy warmup_policy(mix(seeds.noise));
  NoisyActorPolicy explore_policy(state.actor, cfg.exploration_noise, mix(seeds.noise + 1));

  TrainResult result;
  result.best_eval_error = std::numeric_limits<double>::infinity();
  auto checkpoint = [&](std::int64_t steps) {
    Checkpoint c;
    c.params = state.actor;
    c.method = "td3";
    c.seed = seeds.init;
    c.training_steps = steps;
    return c;
  };

  std::int64_t steps = 0;
  int consecutive_blowups = 0;
  std::vector<Transition> pending;
  std::vector<SimplexBlock> weights;

  for (int episode = 0; steps < cfg.total_steps; ++episode) {
    if (cfg.time_budget_seconds > 0.0 && elapsed() > cfg.time_budget_seconds) break;
    const Episode ep = sampler.sample(episode_rng);
    Environment env(ep.problem, *ep.reference, cfg.integrator);
    double reward_sum = 0.0;
    std::int64_t reward_count = 0;
    bool blew_up = false;

    while (!env.done() && steps < cfg.total_steps) {
      const std::vector<InterfaceState> previous = env.interface_states();
      weights.resize(previous.size());
      if (steps < cfg.warmup_steps) {
        warmup_policy.act(previous, weights);
      } else {
        explore_policy.act(previous, weights);
      }
      const StepResult r = env.step_interfaces(weights);
      pending.clear();
      env.emit_transitions(previous, weights, r, pending);
      for (const auto& t : pending) {
        buffer.push(t);
        reward_sum += t.reward;
      }
      reward_count += static_cast<std::int64_t>(pending.size());
      steps += static_cast<std::int64_t>(pending.size());
      blew_up = blew_up || r.blew_up;

      if (steps >= cfg.warmup_steps && buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        for (int u = 0; u < cfg.updates_per_env_step; ++u) {
          td3_update(state, buffer.sample(static_cast<std::size_t>(cfg.batch_size), buffer_rng), cfg);
        }
      }
    }

    TrainingLogRow row;
    row.episode = episode;
    row.steps = steps;
    row.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
    row.eval_relative_error = std::numeric_limits<double>::quiet_NaN();
    row.blew_up = blew_up;

    const bool last = steps >= cfg.total_steps ||
                      (cfg.time_budget_seconds > 0.0 && elapsed() > cfg.time_budget_seconds);
    const bool due = cfg.eval_every > 0 && (episode + 1) % cfg.eval_every == 0;
    if (evaluator && steps > cfg.warmup_steps && (due || last)) {
      row.eval_relative_error = evaluator(state.actor);
      if (std::isfinite(row.eval_relative_error) && row.eval_relative_error < result.best_eval_error) {
        result.best_eval_error = row.eval_relative_error;
        result.best = checkpoint(steps);
      }
    }
    row.wall_time = elapsed();
    result.log.push_back(row);
    if (on_episode) on_episode(row);

    if (steps > cfg.warmup_steps) {
      consecutive_blowups = blew_up ? consecutive_blowups + 1 : 0;
      if (consecutive_blowups >= cfg.max_consecutive_blowups) {
        throw TrainingAborted("training aborted after " + std::to_string(consecutive_blowups) +
                              " consecutive blown-up episodes");
      }
    }
  }

  result.last = checkpoint(steps);
  if (!std::isfinite(result.best_eval_error)) result.best = result.last;
  return result;
}

}  // namespace rlweno
