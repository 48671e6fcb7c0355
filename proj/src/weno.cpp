#include "rlweno/weno.hpp"

#include <cmath>

namespace rlweno {

double roe_speed(double u_left, double u_right, const FluxFunction& flux) {
  const double du = u_right - u_left;
  if (std::abs(du) > 1e-12 * (1.0 + std::abs(u_left))) {
    return (flux.value(u_right) - flux.value(u_left)) / du;
  }
  return flux.derivative(u_left);
}

CandidateFluxes candidate_fluxes(const FluxWindow& f) {
  constexpr double s = 1.0 / 6.0;
  return {
      (2.0 * f[0] - 7.0 * f[1] + 11.0 * f[2]) * s,
      (-f[1] + 5.0 * f[2] + 2.0 * f[3]) * s,
      (2.0 * f[2] + 5.0 * f[3] - f[4]) * s,
      (11.0 * f[3] - 7.0 * f[4] + 2.0 * f[5]) * s,
  };
}

namespace {

inline double sq(double v) { return v * v; }

// Indicators for positive wind on the first five entries of `f`.
SmoothnessIndicators positive_indicators(double fm2, double fm1, double f0, double fp1, double fp2) {
  constexpr double c = 13.0 / 12.0;
  return {
      c * sq(fm2 - 2.0 * fm1 + f0) + 0.25 * sq(fm2 - 4.0 * fm1 + 3.0 * f0),
      c * sq(fm1 - 2.0 * f0 + fp1) + 0.25 * sq(fm1 - fp1),
      c * sq(f0 - 2.0 * fp1 + fp2) + 0.25 * sq(3.0 * f0 - 4.0 * fp1 + fp2),
  };
}

}  // namespace

SmoothnessIndicators smoothness_indicators(const FluxWindow& f, bool upwind_positive) {
  if (upwind_positive) return positive_indicators(f[0], f[1], f[2], f[3], f[4]);
  return positive_indicators(f[5], f[4], f[3], f[2], f[1]);
}

WenoWeights weno_weights(const SmoothnessIndicators& beta, bool upwind_positive) {
  constexpr std::array<double, 3> linear{0.1, 0.6, 0.3};
  std::array<double, 3> alpha{};
  double total = 0.0;
  for (int r = 0; r < 3; ++r) {
    alpha[r] = linear[r] / sq(kWenoEpsilon + beta[r]);
    total += alpha[r];
  }
  WenoWeights w{};
  if (upwind_positive) {
    for (int r = 0; r < 3; ++r) w[r] = alpha[r] / total;
  } else {
    for (int r = 0; r < 3; ++r) w[3 - r] = alpha[r] / total;
  }
  return w;
}

WenoWeights weno_weights_for(const FluxWindow& window, double roe) {
  const bool positive = roe >= 0.0;
  return weno_weights(smoothness_indicators(window, positive), positive);
}

double weno_interface_flux(const std::array<double, 6>& u, const FluxFunction& flux) {
  FluxWindow f;
  for (int k = 0; k < 6; ++k) f[k] = flux.value(u[k]);
  const WenoWeights w = weno_weights_for(f, roe_speed(u[2], u[3], flux));
  return combine(w, candidate_fluxes(f));
}

void weno_interface_fluxes(std::span<const double> u, const FluxFunction& flux, std::span<double> out) {
  const int n = static_cast<int>(u.size());
  if (static_cast<int>(out.size()) != n) throw ContractError("weno_interface_fluxes: size mismatch");
  if (n < 6) throw ContractError("weno_interface_fluxes: need at least 6 cells");
  std::vector<double> f(n + 5);
  // f[k] holds the flux of cell k-2 (periodic), so window j starts at f[j].
  for (int k = 0; k < n + 5; ++k) {
    int c = k - 2;
    c = c < 0 ? c + n : (c >= n ? c - n : c);
    f[k] = flux.value(u[c]);
  }
  for (int j = 0; j < n; ++j) {
    const FluxWindow window{f[j], f[j + 1], f[j + 2], f[j + 3], f[j + 4], f[j + 5]};
    const double roe = roe_speed(u[j], u[j + 1 == n ? 0 : j + 1], flux);
    out[j] = combine(weno_weights_for(window, roe), candidate_fluxes(window));
  }
}

InterfaceFluxFn weno_flux_fn(const FluxFunction& flux) {
  return [flux](std::span<const double> u, std::span<double> out) { weno_interface_fluxes(u, flux, out); };
}

Trajectory weno_solve(const ProblemInstance& problem, Integrator integrator, const EvolveOptions& options) {
  return evolve(problem, weno_flux_fn(problem.flux), integrator, options);
}

}  // namespace rlweno
