#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rlweno/weno.hpp"

using namespace rlweno;

namespace {

// Cell averages of h over [x_j - 1/2, x_j + 1/2] with x_j = j - 2 (unit
// spacing, interface at x = 1/2); the reconstruction targets h(1/2).
template <class Antiderivative>
FluxWindow averages(Antiderivative H) {
  FluxWindow w{};
  for (int k = 0; k < 6; ++k) {
    const double x = k - 2.0;
    w[k] = H(x + 0.5) - H(x - 0.5);
  }
  return w;
}

double advection_error(double dx) {
  const double T = 0.5;
  const int steps = static_cast<int>(std::ceil(T / (0.5 * std::pow(dx, 1.25))));
  ProblemInstance p;
  p.grid = Grid::with_steps(-1.0, 1.0, dx, T / steps, steps);
  p.flux = FluxFunction{FluxKind::linear_u};
  p.u0 = [](double x) { return std::sin(std::numbers::pi * x); };
  EvolveOptions opts;
  opts.cfl_limit = 1.0;
  const Trajectory t = weno_solve(p, Integrator::rk4, opts);
  double sq = 0.0;
  for (int j = 0; j < p.grid.cells; ++j) {
    const double e = t.row(steps)[j] - std::sin(std::numbers::pi * (p.grid.x(j) - T));
    sq += e * e * dx;
  }
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("each candidate reproduces quadratic fluxes exactly") {
  // h(x) = 3 x^2 - x + 2, H = x^3 - x^2/2 + 2x
  const auto w = averages([](double x) { return x * x * x - 0.5 * x * x + 2.0 * x; });
  const double exact = 3.0 * 0.25 - 0.5 + 2.0;
  const CandidateFluxes c = candidate_fluxes(w);
  for (double v : c) CHECK(v == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("candidate formulas") {
  const FluxWindow w{1, 2, 4, 8, 16, 32};
  const CandidateFluxes c = candidate_fluxes(w);
  CHECK(c[0] == doctest::Approx((2.0 * 1 - 7.0 * 2 + 11.0 * 4) / 6));
  CHECK(c[1] == doctest::Approx((-2.0 + 5.0 * 4 + 2.0 * 8) / 6));
  CHECK(c[2] == doctest::Approx((2.0 * 4 + 5.0 * 8 - 16.0) / 6));
  CHECK(c[3] == doctest::Approx((11.0 * 8 - 7.0 * 16 + 2.0 * 32) / 6));
}

TEST_CASE("smooth data gets the linear weights, mirrored for negative wind") {
  const FluxWindow linear{0.1, 0.3, 0.5, 0.7, 0.9, 1.1};
  const WenoWeights pos = weno_weights_for(linear, 1.0);
  CHECK(pos[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(pos[1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pos[2] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pos[3] == 0.0);
  const WenoWeights neg = weno_weights_for(linear, -1.0);
  CHECK(neg[0] == 0.0);
  CHECK(neg[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(neg[2] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(neg[3] == doctest::Approx(0.1).epsilon(1e-12));
  // a = 0 counts as positive wind
  CHECK(weno_weights_for(linear, 0.0)[3] == 0.0);
}

TEST_CASE("jiang-shu indicators") {
  const FluxWindow w{0, 1, 4, 9, 16, 25};
  const SmoothnessIndicators b = smoothness_indicators(w, true);
  CHECK(b[0] == doctest::Approx(13.0 / 12 * 4 + 0.25 * std::pow(0 - 4 + 12, 2)));
  CHECK(b[1] == doctest::Approx(13.0 / 12 * 4 + 0.25 * std::pow(1 - 9, 2)));
  CHECK(b[2] == doctest::Approx(13.0 / 12 * 4 + 0.25 * std::pow(12 - 36 + 16, 2)));
  // negative wind mirrors the window
  const SmoothnessIndicators m = smoothness_indicators(w, false);
  CHECK(m[0] == doctest::Approx(13.0 / 12 * 4 + 0.25 * std::pow(25 - 64 + 27, 2)));
}

TEST_CASE("weights are convex and avoid a discontinuous stencil") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    FluxWindow w;
    for (auto& v : w) v = n(rng);
    const double roe = n(rng);
    const WenoWeights ww = weno_weights_for(w, roe);
    double sum = 0.0;
    for (double v : ww) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ww[roe >= 0.0 ? 3 : 0] == 0.0);
  }
  // jump between f_{i+1} and f_{i+2}: the positive-wind downwind stencil is shut off
  const WenoWeights shock = weno_weights_for({1, 1, 1, 1, 0, 0}, 1.0);
  CHECK(shock[2] < 1e-6);
}

TEST_CASE("roe speed") {
  const FluxFunction burgers{};
  CHECK(roe_speed(1.0, 3.0, burgers) == doctest::Approx(2.0));
  CHECK(roe_speed(2.0, 2.0, burgers) == doctest::Approx(2.0));
  CHECK(roe_speed(-1.0, 0.5, burgers) == doctest::Approx(-0.25));
  CHECK(roe_speed(1.0, 2.0, FluxFunction{FluxKind::u4_over_16}) == doctest::Approx(15.0 / 16));
}

TEST_CASE("constant states are stationary and interface fluxes are periodic") {
  std::vector<double> u(20, 1.5), out(20);
  weno_interface_fluxes(u, FluxFunction{}, out);
  for (double v : out) CHECK(v == doctest::Approx(1.125).epsilon(1e-14));
  for (int j = 0; j < 20; ++j) u[j] = std::sin(2.0 * std::numbers::pi * j / 20);
  weno_interface_fluxes(u, FluxFunction{}, out);
  const std::array<double, 6> window{u[18], u[19], u[0], u[1], u[2], u[3]};
  CHECK(out[0] == doctest::Approx(weno_interface_flux(window, FluxFunction{})).epsilon(1e-14));
}

TEST_CASE("fifth-order convergence for smooth linear advection") {
  const double e1 = advection_error(0.02);
  const double e2 = advection_error(0.01);
  const double order = std::log2(e1 / e2);
  MESSAGE("observed order " << order);
  CHECK(order >= 4.5);
}
