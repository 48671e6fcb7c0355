#include "rlweno/sl_trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rlweno {

void SlConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("sl.learning_rate must be positive");
  if (iterations < 0) throw ConfigError("sl.iterations must be >= 0");
  if (batch_cells < 0) throw ConfigError("sl.batch_cells must be >= 0");
  if (eval_every < 0) throw ConfigError("sl.eval_every must be >= 0");
  if (!(cfl_limit > 0.0)) throw ConfigError("sl.cfl_limit must be positive");
  if (max_consecutive_blowups < 1) throw ConfigError("sl.max_consecutive_blowups must be >= 1");
}

namespace {

// Viscous and forcing tendency; constant with respect to the weights.
std::vector<double> source_terms(std::span<const double> u, double t, const ProblemInstance& problem) {
  const Grid& g = problem.grid;
  std::vector<double> s(u.size(), 0.0);
  if (problem.eta != 0.0) add_viscous_term(u, problem.eta, g.dx, s);
  if (problem.forcing) {
    for (int j = 0; j < g.cells; ++j) s[j] += problem.forcing(g.x(j), t);
  }
  return s;
}

}  // namespace

std::optional<SlLoss> sl_cells_loss(const MlpParams& actor, std::span<const double> field, double t,
                                    std::span<const int> cells, const ProblemInstance& problem,
                                    std::span<const double> reference_next) {
  const Grid& g = problem.grid;
  const int n = g.cells;
  if (static_cast<int>(field.size()) != n || static_cast<int>(reference_next.size()) != n) {
    throw ContractError("sl loss: field and reference must match the grid");
  }
  const double lambda = g.dt / g.dx;

  // Window multiplicity of every cell, and the interfaces that feed them.
  std::vector<int> multiplicity(n, 0);
  for (int j : cells) {
    for (int k = j - 3; k <= j + 3; ++k) ++multiplicity[g.wrap(k)];
  }
  std::vector<int> interfaces;
  std::vector<int> slot(n, -1);
  for (int k = 0; k < n; ++k) {
    if (multiplicity[k] == 0) continue;
    for (int i : {g.wrap(k - 1), k}) {
      if (slot[i] < 0) {
        slot[i] = static_cast<int>(interfaces.size());
        interfaces.push_back(i);
      }
    }
  }

  std::vector<InterfaceState> states(interfaces.size());
  std::vector<CandidateFluxes> candidates(interfaces.size());
  for (std::size_t m = 0; m < interfaces.size(); ++m) {
    states[m] = build_interface_state(field, interfaces[m], problem.flux);
    candidates[m] = candidate_fluxes(window_of(states[m]));
  }
  ForwardCache cache;
  const Eigen::MatrixXd logits = forward(actor, feature_matrix(states), &cache);
  const Eigen::MatrixXd probs = softmax_columns(logits);
  std::vector<double> fluxes(interfaces.size());
  for (std::size_t m = 0; m < interfaces.size(); ++m) {
    double f = 0.0;
    for (int r = 0; r < 4; ++r) f += probs(r, static_cast<Eigen::Index>(m)) * candidates[m][r];
    fluxes[m] = f;
  }

  const std::vector<double> source = source_terms(field, t, problem);
  std::vector<double> grad_u(n, 0.0);
  double loss = 0.0;
  for (int k = 0; k < n; ++k) {
    if (multiplicity[k] == 0) continue;
    const double next = field[k] - lambda * (fluxes[slot[k]] - fluxes[slot[g.wrap(k - 1)]]) + g.dt * source[k];
    const double e = next - reference_next[k];
    if (!std::isfinite(e)) return std::nullopt;
    loss += multiplicity[k] * e * e;
    grad_u[k] = 2.0 * multiplicity[k] * e;
  }

  // dU'_k/dF_k = -lambda, dU'_{k+1}/dF_k = +lambda.
  Eigen::MatrixXd grad_probs(4, static_cast<Eigen::Index>(interfaces.size()));
  for (std::size_t m = 0; m < interfaces.size(); ++m) {
    const int i = interfaces[m];
    const double df = lambda * (grad_u[g.wrap(i + 1)] - grad_u[i]);
    for (int r = 0; r < 4; ++r) grad_probs(r, static_cast<Eigen::Index>(m)) = df * candidates[m][r];
  }
  SlLoss out;
  out.loss = loss;
  out.gradients = backward(actor, cache, softmax_backward(probs, grad_probs)).gradients;
  return out;
}

std::optional<SlLoss> sl_step_loss(const MlpParams& actor, std::span<const double> field, double t, int cell,
                                   const ProblemInstance& problem, std::span<const double> reference_next) {
  const int one[1] = {cell};
  return sl_cells_loss(actor, field, t, one, problem, reference_next);
}

std::vector<double> sl_evolve_step(const MlpParams& actor, std::span<const double> field, double t,
                                   const ProblemInstance& problem) {
  const Grid& g = problem.grid;
  std::vector<InterfaceState> states;
  build_interface_states(field, problem.flux, states);
  const Eigen::MatrixXd probs = softmax_columns(actor_logits(actor, states));
  std::vector<double> fluxes(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const CandidateFluxes c = candidate_fluxes(window_of(states[i]));
    double f = 0.0;
    for (int r = 0; r < 4; ++r) f += probs(r, static_cast<Eigen::Index>(i)) * c[r];
    fluxes[i] = f;
  }
  std::vector<double> next(field.begin(), field.end());
  const std::vector<double> source = source_terms(field, t, problem);
  const double lambda = g.dt / g.dx;
  for (int k = 0; k < g.cells; ++k) {
    next[k] += -lambda * (fluxes[k] - fluxes[g.wrap(k - 1)]) + g.dt * source[k];
  }
  return next;
}

std::string sl_log_csv(const std::vector<SlLogRow>& rows) {
  std::ostringstream out;
  out << "episode,steps,mean_loss,eval_relative_error,wall_time,skipped\n";
  for (const auto& r : rows) {
    out << std::setprecision(10) << r.episode << ',' << r.steps << ',' << r.mean_loss << ',';
    if (!std::isnan(r.eval_relative_error)) out << r.eval_relative_error;
    out << ',' << std::setprecision(4) << r.wall_time << ',' << r.skipped << '\n';
  }
  return out.str();
}

SlResult sl_train(EpisodeSampler& sampler, const SlConfig& cfg, const SlSeeds& seeds,
                  const ActorEvaluator& evaluator, const std::function<void(const SlLogRow&)>& on_episode) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  auto over_budget = [&] { return cfg.time_budget_seconds > 0.0 && elapsed() > cfg.time_budget_seconds; };

  MlpParams actor = init_params(seeds.init, actor_layer_sizes());
  Adam opt(actor, cfg.learning_rate);
  std::mt19937_64 episode_rng(seeds.episodes);

  SlResult result;
  result.best_eval_error = std::numeric_limits<double>::infinity();
  auto checkpoint = [&](std::int64_t steps) {
    Checkpoint c;
    c.params = actor;
    c.method = "sl";
    c.seed = seeds.init;
    c.training_steps = steps;
    return c;
  };

  std::int64_t steps = 0;
  int consecutive_blowups = 0;
  std::vector<int> all_cells, chunk;

  for (int episode = 0; episode < cfg.iterations && !over_budget(); ++episode) {
    const Episode ep = sampler.sample(episode_rng);
    const ProblemInstance& problem = ep.problem;
    const Grid& g = problem.grid;
    all_cells.resize(g.cells);
    for (int j = 0; j < g.cells; ++j) all_cells[j] = j;

    std::vector<double> u = initial_field(problem).values;
    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    int skipped = 0;
    bool blew_up = false;

    for (int n = 0; n < g.steps; ++n) {
      const double t = n * g.dt;
      const std::span<const double> target = ep.reference->row(n + 1);
      const std::vector<double> next = sl_evolve_step(actor, u, t, problem);

      if (cfg.batch_cells == 0) {
        if (auto l = sl_cells_loss(actor, u, t, all_cells, problem, target)) {
          loss_sum += l->loss;
          loss_count += g.cells;
          scale(l->gradients, 1.0 / g.cells);  // mean over windows
          opt.step(actor, l->gradients);
        } else {
          skipped += g.cells;
        }
      } else {
        for (int j0 = 0; j0 < g.cells; j0 += cfg.batch_cells) {
          chunk.assign(all_cells.begin() + j0, all_cells.begin() + std::min(g.cells, j0 + cfg.batch_cells));
          if (auto l = sl_cells_loss(actor, u, t, chunk, problem, target)) {
            const double count = static_cast<double>(chunk.size());
            loss_sum += l->loss;
            loss_count += static_cast<std::int64_t>(chunk.size());
            scale(l->gradients, 1.0 / count);
            opt.step(actor, l->gradients);
          } else {
            skipped += static_cast<int>(chunk.size());
          }
        }
      }
      ++steps;
      if (!actor.all_finite()) throw TrainingAborted("supervised training produced non-finite parameters");

      if (cfg.teacher_forcing) {
        u.assign(target.begin(), target.end());
      } else if (!all_finite(next) || cfl_number(next, problem.flux, g.dx, g.dt) > cfg.cfl_limit) {
        blew_up = true;
        break;
      } else {
        u = next;
      }
    }

    SlLogRow row;
    row.episode = episode;
    row.steps = steps;
    row.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.eval_relative_error = std::numeric_limits<double>::quiet_NaN();
    row.skipped = skipped;
    result.skipped += skipped;

    const bool last = episode + 1 == cfg.iterations || over_budget();
    const bool due = cfg.eval_every > 0 && (episode + 1) % cfg.eval_every == 0;
    if (evaluator && (due || last)) {
      row.eval_relative_error = evaluator(actor);
      if (std::isfinite(row.eval_relative_error) && row.eval_relative_error < result.best_eval_error) {
        result.best_eval_error = row.eval_relative_error;
        result.best = checkpoint(steps);
      }
    }
    row.wall_time = elapsed();
    result.log.push_back(row);
    if (on_episode) on_episode(row);

    consecutive_blowups = blew_up ? consecutive_blowups + 1 : 0;
    if (consecutive_blowups >= cfg.max_consecutive_blowups) {
      throw TrainingAborted("supervised training aborted after " + std::to_string(consecutive_blowups) +
                            " consecutive blown-up episodes");
    }
  }

  result.last = checkpoint(steps);
  if (!std::isfinite(result.best_eval_error)) result.best = result.last;
  return result;
}

}  // namespace rlweno
