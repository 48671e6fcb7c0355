#pragma once

// Central finite-difference checks for ReLU networks. A probe whose +h and
// -h evaluations land on different sides of a ReLU kink is not comparable
// with the analytic gradient and is skipped (and counted).

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rlweno/mlp.hpp"
#include "rlweno/policy.hpp"
#include "rlweno/sl_trainer.hpp"

namespace gradcheck {

using rlweno::MlpParams;

inline double& param_at(MlpParams& p, std::size_t index) {
  for (auto& l : p.layers) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (index < nw) return l.weight.data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (index < nb) return l.bias.data()[index];
    index -= nb;
  }
  throw std::out_of_range("param_at");
}

inline double param_at(const MlpParams& p, std::size_t index) { return param_at(const_cast<MlpParams&>(p), index); }

/// Sign pattern of every hidden pre-activation.
using Pattern = std::vector<bool>;

inline void append_pattern(const rlweno::ForwardCache& cache, Pattern& out) {
  for (std::size_t i = 0; i + 1 < cache.pre_activations.size(); ++i) {
    const auto& z = cache.pre_activations[i];
    for (Eigen::Index k = 0; k < z.size(); ++k) out.push_back(z.data()[k] > 0.0);
  }
}

struct Evaluation {
  double loss = 0.0;
  Pattern pattern;
};

struct Report {
  double worst = 0.0;  // largest relative discrepancy
  int checked = 0;
  int skipped = 0;
};

/// |a - b| / max(|a|, |b|, floor): relative, with a floor that keeps
/// rounding noise on vanishing gradients from dominating.
inline double relative(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline void probe(double& x, double analytic, const std::function<Evaluation()>& eval, Report& r, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const Evaluation plus = eval();
  x = saved - h;
  const Evaluation minus = eval();
  x = saved;
  if (plus.pattern != minus.pattern) {
    ++r.skipped;
    return;
  }
  const double fd = (plus.loss - minus.loss) / (2 * h);
  r.worst = std::max(r.worst, relative(analytic, fd));
  ++r.checked;
}

/// Probes `count` random parameters plus the first weight and bias of
/// every layer.
inline std::vector<std::size_t> probe_indices(const MlpParams& p, int count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx;
  std::size_t offset = 0;
  for (const auto& l : p.layers) {
    idx.push_back(offset);
    offset += static_cast<std::size_t>(l.weight.size());
    idx.push_back(offset);
    offset += static_cast<std::size_t>(l.bias.size());
  }
  std::uniform_int_distribution<std::size_t> pick(0, offset - 1);
  for (int i = 0; i < count; ++i) idx.push_back(pick(rng));
  return idx;
}

/// Glorot weights with non-zero biases so every term of the backward pass
/// is exercised.
inline MlpParams random_params(std::uint64_t seed, std::span<const int> sizes) {
  MlpParams p = rlweno::init_params(seed, sizes);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& l : p.layers) {
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias[k] = n(rng);
  }
  return p;
}


inline std::vector<rlweno::InterfaceState> random_states(std::mt19937_64& rng, int count) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<rlweno::InterfaceState> states(count);
  for (auto& s : states) {
    for (auto& v : s) v = n(rng);
  }
  return states;
}

/// Actor pipeline (features -> subnet -> softmax) on both halves of
/// random cells, loss = sum(C .* weights). Checks parameter gradients.
inline Report actor_fixture(std::uint64_t seed, int probes = 40) {
  using namespace rlweno;
  std::mt19937_64 rng(seed);
  MlpParams actor = random_params(seed, actor_layer_sizes());
  const auto states = random_states(rng, 6);
  const Eigen::MatrixXd x = feature_matrix(states);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = n(rng);

  auto eval = [&]() {
    ForwardCache cache;
    const Eigen::MatrixXd probs = softmax_columns(forward(actor, x, &cache));
    Evaluation e;
    e.loss = (probs.array() * c.array()).sum();
    append_pattern(cache, e.pattern);
    return e;
  };
  ForwardCache cache;
  const Eigen::MatrixXd probs = softmax_columns(forward(actor, x, &cache));
  const BackwardResult g = backward(actor, cache, softmax_backward(probs, c));
  Report r;
  for (std::size_t i : probe_indices(actor, probes, rng)) probe(param_at(actor, i), param_at(g.gradients, i), eval, r);
  return r;
}

/// Critic on random (state, action) pairs, loss = sum(g .* Q). Checks the
/// parameter gradients and the gradient with respect to the action block.
inline Report critic_fixture(std::uint64_t seed, int probes = 40) {
  using namespace rlweno;
  std::mt19937_64 rng(seed);
  MlpParams critic = random_params(seed, critic_layer_sizes());
  const auto halves = random_states(rng, 10);
  std::vector<CellState> cells;
  std::vector<WeightAction> actions;
  for (int i = 0; i < 5; ++i) {
    cells.push_back({halves[2 * i], halves[2 * i + 1]});
    WeightAction a;
    SimplexBlock l = uniform_simplex_sample(rng), rr = uniform_simplex_sample(rng);
    std::copy(l.begin(), l.end(), a.w.begin());
    std::copy(rr.begin(), rr.end(), a.w.begin() + 4);
    actions.push_back(a);
  }
  Eigen::MatrixXd x = critic_input(cells, actions);
  Eigen::MatrixXd gout(1, 5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index k = 0; k < gout.size(); ++k) gout.data()[k] = n(rng);

  auto eval = [&]() {
    ForwardCache cache;
    Evaluation e;
    e.loss = (forward(critic, x, &cache).array() * gout.array()).sum();
    append_pattern(cache, e.pattern);
    return e;
  };
  ForwardCache cache;
  forward(critic, x, &cache);
  const BackwardResult g = backward(critic, cache, gout);
  Report r;
  for (std::size_t i : probe_indices(critic, probes, rng)) probe(param_at(critic, i), param_at(g.gradients, i), eval, r);
  for (int row = kCellFeatures; row < kCellFeatures + kActionSize; ++row) {
    for (int col = 0; col < 5; ++col) probe(x(row, col), g.input_gradient(row, col), eval, r);
  }
  return r;
}

/// One-step windowed SL loss through the flux combination and an Euler step
/// on a 16-cell periodic grid with a perturbed WENO step as the target.
inline Report sl_fixture(std::uint64_t seed, int probes = 40) {
  using namespace rlweno;
  std::mt19937_64 rng(seed);
  MlpParams actor = random_params(seed, actor_layer_sizes());
  ProblemInstance p;
  p.grid = Grid::with_steps(-1.0, 1.0, 0.125, 0.02, 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = 1.5 * u(rng), ph = 3.0 * u(rng);
  p.u0 = [=](double x) { return a + b * std::sin(3.14159265358979 * x + ph); };
  p.eta = seed % 2 == 0 ? 0.0 : 0.01;
  const SolutionField f = initial_field(p);
  const Trajectory step = weno_solve(p, Integrator::euler);
  std::vector<double> target(step.row(1).begin(), step.row(1).end());
  for (auto& v : target) v += 0.01 * u(rng);
  std::vector<int> cells;
  for (int j = 0; j < 16; j += 1 + static_cast<int>(seed % 3)) cells.push_back(j);

  std::vector<InterfaceState> states;
  build_interface_states(f.values, p.flux, states);
  const Eigen::MatrixXd x = feature_matrix(states);
  auto eval = [&]() {
    Evaluation e;
    const auto l = sl_cells_loss(actor, f.values, 0.0, cells, p, target);
    e.loss = l ? l->loss : NAN;
    ForwardCache cache;
    forward(actor, x, &cache);
    append_pattern(cache, e.pattern);
    return e;
  };
  const auto l = sl_cells_loss(actor, f.values, 0.0, cells, p, target);
  Report r;
  if (!l) {
    r.worst = INFINITY;
    return r;
  }
  for (std::size_t i : probe_indices(actor, probes, rng)) probe(param_at(actor, i), param_at(l->gradients, i), eval, r);
  return r;
}

}  // namespace gradcheck
