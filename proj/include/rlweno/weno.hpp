#pragma once

// Fifth-order WENO flux reconstruction with Roe-sign upwinding.
//
// Interface j+1/2 sees the six-point flux window (f_{j-2}, ..., f_{j+3}).
// Its four 3-point stencils give the candidate interpolants, stored in slot
// order (-2, -1, 0, 1). Positive wind averages slots -2..0; negative wind
// averages slots -1..1.

#include <array>
#include <span>

#include "rlweno/solver_core.hpp"

namespace rlweno {

using FluxWindow = std::array<double, 6>;
using CandidateFluxes = std::array<double, 4>;
using WenoWeights = std::array<double, 4>;
using SmoothnessIndicators = std::array<double, 3>;

inline constexpr double kWenoEpsilon = 1e-6;

/// Secant slope (f(ur) - f(ul)) / (ur - ul); falls back to f'(ul) when the
/// states coincide to 1e-12 relative.
double roe_speed(double u_left, double u_right, const FluxFunction& flux);

CandidateFluxes candidate_fluxes(const FluxWindow& window);

/// Jiang-Shu indicators for the three admissible stencils, ordered from the
/// most upwind to the most downwind stencil for the given wind direction.
SmoothnessIndicators smoothness_indicators(const FluxWindow& window, bool upwind_positive);

/// Classical nonlinear weights placed in the four slots; the downwind-only
/// slot is exactly zero.
WenoWeights weno_weights(const SmoothnessIndicators& beta, bool upwind_positive);

/// Weights for one interface straight from its flux window and Roe speed
/// (ties a == 0 count as positive wind).
WenoWeights weno_weights_for(const FluxWindow& window, double roe);

/// Convex combination sum_r w_r * candidates_r, accumulated in slot order.
inline double combine(std::span<const double, 4> weights, const CandidateFluxes& candidates) {
  double sum = 0.0;
  for (int r = 0; r < 4; ++r) sum += weights[r] * candidates[r];
  return sum;
}

/// WENO numerical flux at the interface between u[2] and u[3] of a 6-cell
/// window u_{j-2..j+3}.
double weno_interface_flux(const std::array<double, 6>& u, const FluxFunction& flux);

/// All J periodic interface fluxes: out[j] is the flux at j+1/2.
void weno_interface_fluxes(std::span<const double> u, const FluxFunction& flux, std::span<double> out);

InterfaceFluxFn weno_flux_fn(const FluxFunction& flux);

Trajectory weno_solve(const ProblemInstance& problem, Integrator integrator,
                      const EvolveOptions& options = {});

}  // namespace rlweno
