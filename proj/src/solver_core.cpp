#include "rlweno/solver_core.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace rlweno {

int exact_ratio(double numerator, double denominator, std::string_view what) {
  if (!(denominator > 0.0) || !std::isfinite(numerator)) {
    throw ConfigError(std::string(what) + ": non-positive or non-finite denominator");
  }
  const double ratio = numerator / denominator;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    std::ostringstream msg;
    msg << what << ": ratio " << ratio << " is not an integer";
    throw ConfigError(msg.str());
  }
  return static_cast<int>(rounded);
}

Grid Grid::with_steps(double x_lo, double x_hi, double dx, double dt, int steps) {
  if (!(dx > 0.0) || !(dt > 0.0)) throw ConfigError("grid: dx and dt must be positive");
  if (!(x_hi > x_lo)) throw ConfigError("grid: x_hi must exceed x_lo");
  if (steps < 0) throw ConfigError("grid: negative step count");
  Grid g;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.dx = dx;
  g.dt = dt;
  g.cells = exact_ratio(x_hi - x_lo, dx, "grid cell count (x_hi-x_lo)/dx");
  if (g.cells < 7) throw ConfigError("grid: at least 7 cells are needed for a WENO window");
  g.steps = steps;
  return g;
}

Grid Grid::make(double x_lo, double x_hi, double dx, double dt, double terminal_time) {
  if (!(terminal_time > 0.0)) throw ConfigError("grid: terminal time must be positive");
  return with_steps(x_lo, x_hi, dx, dt, exact_ratio(terminal_time, dt, "grid step count T/dt"));
}

std::string_view FluxFunction::tag() const {
  switch (kind) {
    case FluxKind::burgers_half_u2: return "burgers_half_u2";
    case FluxKind::u4_over_16: return "u4_over_16";
    case FluxKind::linear_u: return "linear_u";
    case FluxKind::u2: return "u2";
  }
  return "unknown";
}

FluxFunction FluxFunction::from_tag(std::string_view tag) {
  if (tag == "burgers_half_u2") return {FluxKind::burgers_half_u2};
  if (tag == "u4_over_16") return {FluxKind::u4_over_16};
  if (tag == "linear_u") return {FluxKind::linear_u};
  if (tag == "u2") return {FluxKind::u2};
  throw ConfigError("unknown flux tag '" + std::string(tag) + "'");
}

double IcParams::operator()(double x) const {
  using std::numbers::pi;
  return a + b * std::sin(c * pi * x) + d * std::cos(e * pi * x);
}

bool ic_params_admissible(const IcParams& p) {
  constexpr double tol = 1e-9;
  const double a = std::abs(p.a), b = std::abs(p.b), d = std::abs(p.d);
  return a <= 1.2 + tol && b <= 3.0 - a + tol && std::abs(a + b + d - 4.0) <= tol;
}

IcParams sample_initial_condition(std::uint64_t seed, std::span<const int> c_choices) {
  if (c_choices.empty()) throw ConfigError("sample_initial_condition: empty c_choices");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, c_choices.size() - 1);
  auto sign = [&] { return unit(rng) < 0.5 ? -1.0 : 1.0; };

  IcParams p;
  p.a = -1.2 + 2.4 * unit(rng);
  const double b_mag = (3.0 - std::abs(p.a)) * unit(rng);
  p.b = sign() * b_mag;
  p.d = sign() * (4.0 - std::abs(p.a) - b_mag);
  p.c = c_choices[pick(rng)];
  p.e = c_choices[pick(rng)];
  return p;
}

double ForcingParams::operator()(double x, double t) const {
  using std::numbers::pi;
  double sum = 0.0;
  for (const auto& term : terms) {
    sum += term.amplitude * std::sin(term.omega * t + 2.0 * pi * term.wavenumber * x / length + term.phase);
  }
  return sum;
}

ForcingParams sample_forcing(std::uint64_t seed, double length) {
  if (!(length > 0.0)) throw ConfigError("sample_forcing: domain length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  std::uniform_real_distribution<double> omega(-0.4, 0.4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> wavenumber(3, 6);
  ForcingParams f;
  f.length = length;
  f.terms.resize(20);
  for (auto& term : f.terms) {
    term.amplitude = amp(rng);
    term.omega = omega(rng);
    term.phase = phase(rng);
    term.wavenumber = wavenumber(rng);
  }
  return f;
}

void ProblemInstance::validate() const {
  if (eta < 0.0) throw ConfigError("problem: eta must be >= 0");
  if (!(grid.terminal_time() > 0.0)) throw ConfigError("problem: terminal time must be positive");
  if (!u0) throw ConfigError("problem: missing initial condition");
}

Trajectory::Trajectory(int cells, std::vector<double> data) : cells_(cells), data_(std::move(data)) {
  if (cells_ <= 0 || data_.size() % static_cast<std::size_t>(cells_) != 0) {
    throw ContractError("trajectory: data size is not a multiple of the cell count");
  }
}

SolutionField Trajectory::at(int n) const {
  auto r = row(n);
  return {std::vector<double>(r.begin(), r.end()), n};
}

void Trajectory::append(std::span<const double> values) {
  if (static_cast<int>(values.size()) != cells_) throw ContractError("trajectory: slice length mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
}

std::string_view integrator_tag(Integrator integrator) {
  return integrator == Integrator::euler ? "euler" : "rk4";
}

Integrator integrator_from_tag(std::string_view tag) {
  if (tag == "euler") return Integrator::euler;
  if (tag == "rk4") return Integrator::rk4;
  throw ConfigError("unknown integrator '" + std::string(tag) + "'");
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void rhs_conservative(std::span<const double> interface_fluxes, double dx, std::span<double> out) {
  const std::size_t n = interface_fluxes.size();
  if (out.size() != n) throw ContractError("rhs_conservative: output size mismatch");
  if (!all_finite(interface_fluxes)) throw BlowUpError("non-finite interface flux", -1);
  const double inv_dx = 1.0 / dx;
  for (std::size_t j = 0; j < n; ++j) {
    const double left = interface_fluxes[j == 0 ? n - 1 : j - 1];
    out[j] = -(interface_fluxes[j] - left) * inv_dx;
  }
}

std::vector<double> rhs_conservative(std::span<const double> interface_fluxes, double dx) {
  std::vector<double> out(interface_fluxes.size());
  rhs_conservative(interface_fluxes, dx, out);
  return out;
}

void add_viscous_term(std::span<const double> u, double eta, double dx, std::span<double> out) {
  if (eta == 0.0) return;
  const std::size_t n = u.size();
  const double scale = eta / (dx * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const double left = u[j == 0 ? n - 1 : j - 1];
    const double right = u[j + 1 == n ? 0 : j + 1];
    out[j] += scale * (right - 2.0 * u[j] + left);
  }
}

std::vector<double> viscous_term(std::span<const double> u, double eta, double dx) {
  if (eta < 0.0) throw ContractError("viscous_term: eta must be >= 0");
  std::vector<double> out(u.size(), 0.0);
  add_viscous_term(u, eta, dx, out);
  return out;
}

namespace {

void check_finite(const SolutionField& f) {
  if (!all_finite(f.values)) {
    throw BlowUpError("solution blew up at step " + std::to_string(f.time_index), f.time_index);
  }
}

}  // namespace

SolutionField step_euler(const SolutionField& field, const RhsFn& rhs, double dt, double t) {
  if (!(dt > 0.0)) throw ContractError("step_euler: dt must be positive");
  const std::size_t n = field.values.size();
  std::vector<double> k(n);
  rhs(field.values, t, k);
  SolutionField next{std::vector<double>(n), field.time_index + 1};
  for (std::size_t j = 0; j < n; ++j) next.values[j] = field.values[j] + dt * k[j];
  check_finite(next);
  return next;
}

SolutionField step_rk4(const SolutionField& field, const RhsFn& rhs, double dt, double t) {
  if (!(dt > 0.0)) throw ContractError("step_rk4: dt must be positive");
  const std::size_t n = field.values.size();
  const auto& u = field.values;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);

  rhs(u, t, k1);
  for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + 0.5 * dt * k1[j];
  rhs(stage, t + 0.5 * dt, k2);
  for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + 0.5 * dt * k2[j];
  rhs(stage, t + 0.5 * dt, k3);
  for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + dt * k3[j];
  rhs(stage, t + dt, k4);

  SolutionField next{std::vector<double>(n), field.time_index + 1};
  const double w = dt / 6.0;
  for (std::size_t j = 0; j < n; ++j) {
    next.values[j] = u[j] + w * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  check_finite(next);
  return next;
}

SolutionField step(Integrator integrator, const SolutionField& field, const RhsFn& rhs, double dt,
                   double t) {
  return integrator == Integrator::euler ? step_euler(field, rhs, dt, t) : step_rk4(field, rhs, dt, t);
}

double cfl_number(std::span<const double> u, const FluxFunction& flux, double dx, double dt) {
  double speed = 0.0;
  for (double v : u) speed = std::max(speed, std::abs(flux.derivative(v)));
  return dt / dx * speed;
}

double total_mass(std::span<const double> u, double dx) {
  double sum = 0.0;
  for (double v : u) sum += v;
  return dx * sum;
}

RhsFn make_rhs(const ProblemInstance& problem, InterfaceFluxFn interface_flux) {
  const Grid grid = problem.grid;
  const double eta = problem.eta;
  ForcingFn forcing = problem.forcing;
  std::vector<double> xs(grid.cells);
  for (int j = 0; j < grid.cells; ++j) xs[j] = grid.x(j);
  auto scratch = std::make_shared<std::vector<double>>(grid.cells);

  return [grid, eta, forcing, xs, scratch, interface_flux = std::move(interface_flux)](
             std::span<const double> u, double t, std::span<double> out) {
    auto& fluxes = *scratch;
    interface_flux(u, fluxes);
    rhs_conservative(fluxes, grid.dx, out);
    add_viscous_term(u, eta, grid.dx, out);
    if (forcing) {
      for (int j = 0; j < grid.cells; ++j) out[j] += forcing(xs[j], t);
    }
  };
}

SolutionField initial_field(const ProblemInstance& problem) {
  SolutionField f{std::vector<double>(problem.grid.cells), 0};
  for (int j = 0; j < problem.grid.cells; ++j) f.values[j] = problem.u0(problem.grid.x(j));
  check_finite(f);
  return f;
}

void evolve_observed(const ProblemInstance& problem, const InterfaceFluxFn& interface_flux,
                     Integrator integrator, const SliceObserver& observer,
                     const EvolveOptions& options) {
  problem.validate();
  const Grid& grid = problem.grid;
  const RhsFn rhs = make_rhs(problem, interface_flux);
  SolutionField field = initial_field(problem);
  for (int n = 0;; ++n) {
    if (!all_finite(field.values)) throw BlowUpError("solution became non-finite at step " + std::to_string(n), n);
    const double cfl = cfl_number(field.values, problem.flux, grid.dx, grid.dt);
    if (cfl > options.cfl_limit) {
      std::ostringstream msg;
      msg << "CFL number " << cfl << " exceeds limit " << options.cfl_limit << " at step " << n;
      throw CflError(msg.str(), cfl, n);
    }
    observer(n, field.values);
    if (n == grid.steps) break;
    field = step(integrator, field, rhs, grid.dt, n * grid.dt);
  }
}

Trajectory evolve(const ProblemInstance& problem, const InterfaceFluxFn& interface_flux,
                  Integrator integrator, const EvolveOptions& options) {
  Trajectory traj(problem.grid.cells);
  traj.reserve(problem.grid.steps + 1);
  evolve_observed(problem, interface_flux, integrator,
                  [&](int, std::span<const double> u) { traj.append(u); }, options);
  return traj;
}

}  // namespace rlweno
