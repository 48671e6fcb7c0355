#pragma once

// The solver viewed as a decision process. Each cell j is an agent whose
// state is the pair of interface states (j-1/2, j+1/2) and whose action is a
// simplex weight block per interface. Interfaces are shared by neighbouring
// cells, so fluxes are computed once per interface and the scheme stays
// conservative whatever the weights are.

#include <array>
#include <span>
#include <vector>

#include "rlweno/solver_core.hpp"
#include "rlweno/weno.hpp"

namespace rlweno {

/// Six window fluxes (f_{i-2} .. f_{i+3}) followed by the Roe speed at i+1/2.
using InterfaceState = std::array<double, 7>;
/// Four stencil weights (slots -2, -1, 0, 1) for one interface.
using SimplexBlock = std::array<double, 4>;

struct CellState {
  InterfaceState left{};   // interface j-1/2
  InterfaceState right{};  // interface j+1/2
};

/// Left block in [0, 4), right block in [4, 8).
struct WeightAction {
  std::array<double, 8> w{};
  std::span<const double, 4> left() const { return std::span<const double, 4>(w.data(), 4); }
  std::span<const double, 4> right() const { return std::span<const double, 4>(w.data() + 4, 4); }
};

struct Transition {
  CellState state;
  WeightAction action;
  double reward = 0.0;
  CellState next_state;
  bool done = false;
};

inline FluxWindow window_of(const InterfaceState& s) { return {s[0], s[1], s[2], s[3], s[4], s[5]}; }
inline double roe_of(const InterfaceState& s) { return s[6]; }

/// State of interface i+1/2 (between cells i and i+1), periodic indexing.
InterfaceState build_interface_state(std::span<const double> u, int interface_index, const FluxFunction& flux);
void build_interface_states(std::span<const double> u, const FluxFunction& flux, std::vector<InterfaceState>& out);
CellState cell_state(std::span<const InterfaceState> interface_states, int cell);

/// Checks that `w` lies on the probability simplex within `tol`.
bool on_simplex(std::span<const double> w, double tol = 1e-9);

/// Dot product of simplex weights with the candidates; throws ContractError
/// for weights off the simplex by more than 1e-9.
double apply_action(std::span<const double, 4> weights, const CandidateFluxes& candidates);

/// -max_k |error_k| over the 7-point window.
double reward(std::span<const double> window_errors);

/// Anything that maps interface states to stencil weights.
class FluxPolicy {
 public:
  virtual ~FluxPolicy() = default;
  virtual void act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) = 0;
};

/// Classical WENO weights computed from the state itself.
class WenoPolicy final : public FluxPolicy {
 public:
  void act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) override;
};

/// Interface fluxes from per-interface weights and the state windows.
void combine_interface_fluxes(std::span<const InterfaceState> states, std::span<const SimplexBlock> weights,
                              std::span<double> out);

/// Flux evaluator that queries `policy` at every right-hand-side evaluation
/// (every RK stage). The policy must outlive the returned function.
InterfaceFluxFn policy_flux_fn(FluxPolicy& policy, const FluxFunction& flux);

Trajectory policy_solve(FluxPolicy& policy, const ProblemInstance& problem, Integrator integrator,
                        const EvolveOptions& options = {});

struct EnvOptions {
  double blowup_reward = -10.0;
  /// A step whose result exceeds this CFL number counts as a blow-up.
  double cfl_limit = 1.0;
};

struct StepResult {
  std::vector<double> rewards;  // one per cell
  bool done = false;
  bool blew_up = false;
};

/// One episode on a problem instance, scored against a reference trajectory
/// already restricted to the problem grid.
class Environment {
 public:
  Environment(ProblemInstance problem, Trajectory reference, Integrator integrator, EnvOptions options = {});

  const ProblemInstance& problem() const { return problem_; }
  const SolutionField& field() const { return field_; }
  const Trajectory& trajectory() const { return trajectory_; }
  int time_index() const { return field_.time_index; }
  bool done() const { return done_; }
  int cells() const { return problem_.grid.cells; }

  /// Interface states of the current field (index i is interface i+1/2).
  const std::vector<InterfaceState>& interface_states() const { return states_; }

  /// Advances one step with fixed per-interface weights (held constant over
  /// all RK stages when the integrator is RK4).
  StepResult step_interfaces(std::span<const SimplexBlock> weights);

  /// Advances one step with per-cell actions; interface j+1/2 uses the right
  /// block of cell j.
  StepResult step_cells(std::span<const WeightAction> actions);

  /// Advances one step querying `policy` at every stage. Returns the
  /// stage-one weights through `first_stage`.
  StepResult step_policy(FluxPolicy& policy, std::vector<SimplexBlock>* first_stage = nullptr);

  /// Per-cell transitions for the step just taken, appended in ascending j.
  void emit_transitions(const std::vector<InterfaceState>& previous_states, std::span<const SimplexBlock> weights,
                        const StepResult& result, std::vector<Transition>& out) const;

 private:
  StepResult finish_step(SolutionField next);

  ProblemInstance problem_;
  Trajectory reference_;
  Integrator integrator_;
  EnvOptions options_;
  SolutionField field_;
  Trajectory trajectory_;
  std::vector<InterfaceState> states_;
  bool done_ = false;
};

/// Single transition step over a given field (no episode bookkeeping).
struct EnvStepOutput {
  SolutionField next;
  std::vector<double> rewards;
};
EnvStepOutput env_step(const SolutionField& field, std::span<const WeightAction> actions,
                       const ProblemInstance& problem, Integrator integrator, std::span<const double> reference_next);

struct RolloutResult {
  Trajectory trajectory;
  std::vector<Transition> transitions;
  bool blew_up = false;
};

RolloutResult rollout(FluxPolicy& policy, const ProblemInstance& problem, const Trajectory& reference,
                      Integrator integrator, const EnvOptions& options = {});

}  // namespace rlweno
