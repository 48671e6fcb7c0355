#pragma once

// Grids, flux functions, problem instances and the method-of-lines machinery
// shared by every solver in the project: conservative right-hand side,
// viscous term, forcing, Euler/RK4 time stepping and diagnostics.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlweno {

/// Invalid experiment or grid configuration (maps to CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Violated precondition on an API argument (wrong shape, off-simplex weights).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A solution became non-finite.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, int time_index)
      : std::runtime_error(what), time_index_(time_index) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

/// The explicit scheme left its stability region (CFL number above limit).
class CflError : public std::runtime_error {
 public:
  CflError(const std::string& what, double cfl, int time_index)
      : std::runtime_error(what), cfl_(cfl), time_index_(time_index) {}
  double cfl() const { return cfl_; }
  int time_index() const { return time_index_; }

 private:
  double cfl_;
  int time_index_;
};

/// Uniform periodic mesh on [x_lo, x_hi). Cell j sits at x_lo + j*dx.
struct Grid {
  double x_lo = -1.0;
  double x_hi = 1.0;
  double dx = 0.02;
  double dt = 0.002;
  int cells = 100;
  int steps = 0;

  /// Builds a grid whose cell count (x_hi-x_lo)/dx and step count T/dt must
  /// both be integers (1e-9 relative tolerance).
  static Grid make(double x_lo, double x_hi, double dx, double dt,
                   double terminal_time);
  /// Same, with an explicit step count (e.g. for randomly drawn horizons).
  static Grid with_steps(double x_lo, double x_hi, double dx, double dt,
                         int steps);

  double length() const { return x_hi - x_lo; }
  double x(int j) const { return x_lo + j * dx; }
  double terminal_time() const { return steps * dt; }
  int wrap(int j) const {
    const int r = j % cells;
    return r < 0 ? r + cells : r;
  }
};

/// Rounds ratio to the nearest integer, throwing ConfigError when it is not
/// an integer within 1e-9 relative tolerance.
int exact_ratio(double numerator, double denominator, std::string_view what);

enum class FluxKind { burgers_half_u2, u4_over_16, linear_u, u2 };

struct FluxFunction {
  FluxKind kind = FluxKind::burgers_half_u2;

  double value(double u) const {
    switch (kind) {
      case FluxKind::burgers_half_u2: return 0.5 * u * u;
      case FluxKind::u4_over_16: { const double u2 = u * u; return u2 * u2 / 16.0; }
      case FluxKind::linear_u: return u;
      case FluxKind::u2: return u * u;
    }
    return 0.0;
  }
  double derivative(double u) const {
    switch (kind) {
      case FluxKind::burgers_half_u2: return u;
      case FluxKind::u4_over_16: return u * u * u / 4.0;
      case FluxKind::linear_u: return 1.0;
      case FluxKind::u2: return 2.0 * u;
    }
    return 0.0;
  }

  std::string_view tag() const;
  bool operator==(const FluxFunction&) const = default;
  static FluxFunction from_tag(std::string_view tag);
};

/// Parameters of u0(x) = a + b sin(c pi x) + d cos(e pi x).
struct IcParams {
  double a = 0, b = 0, c = 0, d = 0, e = 0;
  double operator()(double x) const;
};

/// |a| <= 1.2, |b| <= 3 - |a|, |a| + |b| + |d| = 4 (1e-9 tolerance).
bool ic_params_admissible(const IcParams& p);

/// Draws an admissible IcParams; c and e come from c_choices. Deterministic
/// per seed.
IcParams sample_initial_condition(std::uint64_t seed,
                                  std::span<const int> c_choices);

struct ForcingTerm {
  double amplitude = 0;
  double omega = 0;
  double phase = 0;
  int wavenumber = 3;
};

/// F(x,t) = sum_i A_i sin(omega_i t + 2 pi l_i x / L + psi_i).
struct ForcingParams {
  std::vector<ForcingTerm> terms;
  double length = 1.0;
  double operator()(double x, double t) const;
};

ForcingParams sample_forcing(std::uint64_t seed, double length);

using InitialCondition = std::function<double(double)>;
using ForcingFn = std::function<double(double, double)>;

struct ProblemInstance {
  Grid grid;
  FluxFunction flux;
  InitialCondition u0;
  double eta = 0.0;
  ForcingFn forcing;  // empty when there is no forcing
  double terminal_time() const { return grid.terminal_time(); }
  void validate() const;
};

struct SolutionField {
  std::vector<double> values;
  int time_index = 0;
};

/// Row-major [time][space] store of U^n_j for n = 0..steps.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(int cells) : cells_(cells) {}
  Trajectory(int cells, std::vector<double> data);

  int cells() const { return cells_; }
  int slices() const { return cells_ == 0 ? 0 : static_cast<int>(data_.size()) / cells_; }
  std::span<const double> row(int n) const {
    return {data_.data() + static_cast<std::size_t>(n) * cells_, static_cast<std::size_t>(cells_)};
  }
  SolutionField at(int n) const;
  void append(std::span<const double> values);
  void reserve(int slices) { data_.reserve(static_cast<std::size_t>(slices) * cells_); }
  const std::vector<double>& data() const { return data_; }

 private:
  int cells_ = 0;
  std::vector<double> data_;
};

/// du/dt evaluator: writes the tendency of `u` at time `t` into `out`.
using RhsFn = std::function<void(std::span<const double> u, double t, std::span<double> out)>;

/// Fills `out[j]` with the numerical flux at interface j+1/2 for field `u`.
using InterfaceFluxFn = std::function<void(std::span<const double> u, std::span<double> out)>;

enum class Integrator { euler, rk4 };
std::string_view integrator_tag(Integrator integrator);
Integrator integrator_from_tag(std::string_view tag);

/// tendency_j = -(fhat_{j+1/2} - fhat_{j-1/2}) / dx with periodic wrap.
std::vector<double> rhs_conservative(std::span<const double> interface_fluxes, double dx);
void rhs_conservative(std::span<const double> interface_fluxes, double dx, std::span<double> out);

/// tendency_j = eta (U_{j+1} - 2U_j + U_{j-1}) / dx^2 (periodic).
std::vector<double> viscous_term(std::span<const double> u, double eta, double dx);
void add_viscous_term(std::span<const double> u, double eta, double dx, std::span<double> out);

SolutionField step_euler(const SolutionField& field, const RhsFn& rhs, double dt, double t = 0.0);
SolutionField step_rk4(const SolutionField& field, const RhsFn& rhs, double dt, double t = 0.0);
SolutionField step(Integrator integrator, const SolutionField& field, const RhsFn& rhs,
                   double dt, double t = 0.0);

double cfl_number(std::span<const double> u, const FluxFunction& flux, double dx, double dt);
double total_mass(std::span<const double> u, double dx);

bool all_finite(std::span<const double> values);

/// Full tendency for the problem: conservative flux difference, plus the
/// viscous term and forcing when present.
RhsFn make_rhs(const ProblemInstance& problem, InterfaceFluxFn interface_flux);

SolutionField initial_field(const ProblemInstance& problem);

/// Called with each slice U^n as it is produced (n = 0 first).
using SliceObserver = std::function<void(int n, std::span<const double> u)>;

struct EvolveOptions {
  double cfl_limit = 1.0;
};

/// Integrates the problem to its terminal time. Throws CflError when the CFL
/// number of any slice exceeds the limit and BlowUpError on non-finite values.
void evolve_observed(const ProblemInstance& problem, const InterfaceFluxFn& interface_flux,
                     Integrator integrator, const SliceObserver& observer,
                     const EvolveOptions& options = {});

Trajectory evolve(const ProblemInstance& problem, const InterfaceFluxFn& interface_flux,
                  Integrator integrator, const EvolveOptions& options = {});

}  // namespace rlweno
