#include "rlweno/mdp_env.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace rlweno {

InterfaceState build_interface_state(std::span<const double> u, int i, const FluxFunction& flux) {
  const int n = static_cast<int>(u.size());
  auto at = [&](int k) {
    k %= n;
    return u[k < 0 ? k + n : k];
  };
  InterfaceState s;
  for (int k = 0; k < 6; ++k) s[k] = flux.value(at(i - 2 + k));
  s[6] = roe_speed(at(i), at(i + 1), flux);
  return s;
}

void build_interface_states(std::span<const double> u, const FluxFunction& flux, std::vector<InterfaceState>& out) {
  const int n = static_cast<int>(u.size());
  out.resize(n);
  std::vector<double> f(n + 5);
  for (int k = 0; k < n + 5; ++k) {
    int c = k - 2;
    c = c < 0 ? c + n : (c >= n ? c - n : c);
    f[k] = flux.value(u[c]);
  }
  for (int i = 0; i < n; ++i) {
    auto& s = out[i];
    for (int k = 0; k < 6; ++k) s[k] = f[i + k];
    s[6] = roe_speed(u[i], u[i + 1 == n ? 0 : i + 1], flux);
  }
}

CellState cell_state(std::span<const InterfaceState> states, int cell) {
  const int n = static_cast<int>(states.size());
  return {states[cell == 0 ? n - 1 : cell - 1], states[cell]};
}

bool on_simplex(std::span<const double> w, double tol) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= -tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

double apply_action(std::span<const double, 4> weights, const CandidateFluxes& candidates) {
  if (!on_simplex(weights)) throw ContractError("apply_action: weights are not on the simplex");
  return combine(weights, candidates);
}

double reward(std::span<const double> window_errors) {
  double worst = 0.0;
  for (double e : window_errors) worst = std::max(worst, std::abs(e));
  return -worst;
}

void WenoPolicy::act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) {
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = weno_weights_for(window_of(states[i]), roe_of(states[i]));
}

void combine_interface_fluxes(std::span<const InterfaceState> states, std::span<const SimplexBlock> weights,
                              std::span<double> out) {
  if (states.size() != weights.size() || states.size() != out.size()) {
    throw ContractError("combine_interface_fluxes: size mismatch");
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    out[i] = combine(weights[i], candidate_fluxes(window_of(states[i])));
  }
}

InterfaceFluxFn policy_flux_fn(FluxPolicy& policy, const FluxFunction& flux) {
  struct Scratch {
    std::vector<InterfaceState> states;
    std::vector<SimplexBlock> weights;
  };
  auto scratch = std::make_shared<Scratch>();
  return [&policy, flux, scratch](std::span<const double> u, std::span<double> out) {
    build_interface_states(u, flux, scratch->states);
    scratch->weights.resize(u.size());
    policy.act(scratch->states, scratch->weights);
    combine_interface_fluxes(scratch->states, scratch->weights, out);
  };
}

Trajectory policy_solve(FluxPolicy& policy, const ProblemInstance& problem, Integrator integrator,
                        const EvolveOptions& options) {
  return evolve(problem, policy_flux_fn(policy, problem.flux), integrator, options);
}

namespace {

// Frozen-weight flux evaluator: candidates follow the stage state, weights do not.
InterfaceFluxFn frozen_flux_fn(std::span<const SimplexBlock> weights, const FluxFunction& flux) {
  auto states = std::make_shared<std::vector<InterfaceState>>();
  return [weights, flux, states](std::span<const double> u, std::span<double> out) {
    build_interface_states(u, flux, *states);
    combine_interface_fluxes(*states, weights, out);
  };
}

std::vector<double> window_rewards(std::span<const double> u, std::span<const double> ref) {
  const int n = static_cast<int>(u.size());
  std::vector<double> err(n);
  for (int j = 0; j < n; ++j) err[j] = u[j] - ref[j];
  std::vector<double> rewards(n);
  std::array<double, 7> window{};
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < 7; ++k) {
      int idx = (j - 3 + k) % n;
      window[k] = err[idx < 0 ? idx + n : idx];
    }
    rewards[j] = reward(window);
  }
  return rewards;
}

std::vector<SimplexBlock> right_blocks(std::span<const WeightAction> actions) {
  std::vector<SimplexBlock> w(actions.size());
  for (std::size_t j = 0; j < actions.size(); ++j) std::copy_n(actions[j].w.begin() + 4, 4, w[j].begin());
  return w;
}

}  // namespace

Environment::Environment(ProblemInstance problem, Trajectory reference, Integrator integrator, EnvOptions options)
    : problem_(std::move(problem)),
      reference_(std::move(reference)),
      integrator_(integrator),
      options_(options),
      trajectory_(problem_.grid.cells) {
  problem_.validate();
  if (reference_.cells() != problem_.grid.cells || reference_.slices() < problem_.grid.steps + 1) {
    throw ConfigError("environment: reference is not aligned with the problem grid");
  }
  field_ = initial_field(problem_);
  trajectory_.reserve(problem_.grid.steps + 1);
  trajectory_.append(field_.values);
  build_interface_states(field_.values, problem_.flux, states_);
  done_ = problem_.grid.steps == 0;
}

StepResult Environment::finish_step(SolutionField next) {
  const Grid& g = problem_.grid;
  StepResult result;
  const bool finite = all_finite(next.values);
  if (!finite || cfl_number(next.values, problem_.flux, g.dx, g.dt) > options_.cfl_limit) {
    result.rewards.assign(g.cells, options_.blowup_reward);
    result.done = true;
    result.blew_up = true;
    done_ = true;
    return result;
  }
  result.rewards = window_rewards(next.values, reference_.row(next.time_index));
  field_ = std::move(next);
  trajectory_.append(field_.values);
  build_interface_states(field_.values, problem_.flux, states_);
  done_ = field_.time_index >= g.steps;
  result.done = done_;
  return result;
}

StepResult Environment::step_interfaces(std::span<const SimplexBlock> weights) {
  if (done_) throw ContractError("environment: step after episode end");
  if (static_cast<int>(weights.size()) != cells()) throw ContractError("environment: one weight block per interface");
  const RhsFn rhs = make_rhs(problem_, frozen_flux_fn(weights, problem_.flux));
  SolutionField next;
  try {
    next = step(integrator_, field_, rhs, problem_.grid.dt, field_.time_index * problem_.grid.dt);
  } catch (const BlowUpError&) {
    next.values.assign(cells(), std::nan(""));
    next.time_index = field_.time_index + 1;
  }
  return finish_step(std::move(next));
}

StepResult Environment::step_cells(std::span<const WeightAction> actions) {
  if (static_cast<int>(actions.size()) != cells()) throw ContractError("environment: one action per cell");
  const auto w = right_blocks(actions);
  return step_interfaces(w);
}

StepResult Environment::step_policy(FluxPolicy& policy, std::vector<SimplexBlock>* first_stage) {
  if (done_) throw ContractError("environment: step after episode end");
  if (first_stage) {
    first_stage->resize(cells());
    policy.act(states_, *first_stage);
  }
  const RhsFn rhs = make_rhs(problem_, policy_flux_fn(policy, problem_.flux));
  SolutionField next;
  try {
    next = step(integrator_, field_, rhs, problem_.grid.dt, field_.time_index * problem_.grid.dt);
  } catch (const BlowUpError&) {
    next.values.assign(cells(), std::nan(""));
    next.time_index = field_.time_index + 1;
  }
  return finish_step(std::move(next));
}

void Environment::emit_transitions(const std::vector<InterfaceState>& previous, std::span<const SimplexBlock> weights,
                                   const StepResult& result, std::vector<Transition>& out) const {
  const int n = cells();
  for (int j = 0; j < n; ++j) {
    const int left = j == 0 ? n - 1 : j - 1;
    Transition t;
    t.state = {previous[left], previous[j]};
    std::copy(weights[left].begin(), weights[left].end(), t.action.w.begin());
    std::copy(weights[j].begin(), weights[j].end(), t.action.w.begin() + 4);
    t.reward = result.rewards[j];
    t.next_state = result.blew_up ? t.state : CellState{states_[left], states_[j]};
    t.done = result.done;
    out.push_back(t);
  }
}

EnvStepOutput env_step(const SolutionField& field, std::span<const WeightAction> actions,
                       const ProblemInstance& problem, Integrator integrator, std::span<const double> reference_next) {
  const int n = problem.grid.cells;
  if (static_cast<int>(actions.size()) != n || static_cast<int>(field.values.size()) != n) {
    throw ContractError("env_step: one action per cell required");
  }
  if (static_cast<int>(reference_next.size()) != n) throw ConfigError("env_step: reference slice misaligned");
  const auto w = right_blocks(actions);
  const RhsFn rhs = make_rhs(problem, frozen_flux_fn(w, problem.flux));
  EnvStepOutput out;
  out.next = step(integrator, field, rhs, problem.grid.dt, field.time_index * problem.grid.dt);
  out.rewards = window_rewards(out.next.values, reference_next);
  return out;
}

RolloutResult rollout(FluxPolicy& policy, const ProblemInstance& problem, const Trajectory& reference,
                      Integrator integrator, const EnvOptions& options) {
  Environment env(problem, reference, integrator, options);
  RolloutResult out;
  out.transitions.reserve(static_cast<std::size_t>(problem.grid.steps) * problem.grid.cells);
  std::vector<SimplexBlock> weights;
  while (!env.done()) {
    const auto previous = env.interface_states();
    StepResult r;
    if (integrator == Integrator::euler) {
      weights.resize(previous.size());
      policy.act(previous, weights);
      r = env.step_interfaces(weights);
    } else {
      r = env.step_policy(policy, &weights);
    }
    env.emit_transitions(previous, weights, r, out.transitions);
    if (r.blew_up) out.blew_up = true;
  }
  out.trajectory = env.trajectory();
  return out;
}

}  // namespace rlweno
