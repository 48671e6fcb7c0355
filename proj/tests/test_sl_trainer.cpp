#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gradcheck.hpp"
#include "rlweno/sl_trainer.hpp"

using namespace rlweno;

namespace {

ProblemInstance small_problem(double eta = 0.0) {
  ProblemInstance p;
  p.grid = Grid::with_steps(-1.0, 1.0, 0.125, 0.02, 4);
  p.u0 = [](double x) { return 0.3 + std::sin(std::numbers::pi * x); };
  p.eta = eta;
  return p;
}

std::vector<int> all_cells(int n) {
  std::vector<int> c(n);
  for (int j = 0; j < n; ++j) c[j] = j;
  return c;
}

}  // namespace

TEST_CASE("loss vanishes when the target is the actor's own step") {
  const MlpParams actor = init_params(1, actor_layer_sizes());
  for (double eta : {0.0, 0.01}) {
    const ProblemInstance p = small_problem(eta);
    const SolutionField f = initial_field(p);
    const std::vector<double> next = sl_evolve_step(actor, f.values, 0.0, p);
    const auto cells = all_cells(16);
    const auto l = sl_cells_loss(actor, f.values, 0.0, cells, p, next);
    REQUIRE(l.has_value());
    CHECK(l->loss < 1e-28);  // rounding only
    for (const auto& layer : l->gradients.layers) {
      CHECK(layer.weight.cwiseAbs().maxCoeff() < 1e-15);
      CHECK(layer.bias.cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("loss counts every cell of each seven-point window") {
  const MlpParams actor = init_params(2, actor_layer_sizes());
  const ProblemInstance p = small_problem();
  const SolutionField f = initial_field(p);
  std::vector<double> target = sl_evolve_step(actor, f.values, 0.0, p);
  target[5] += 0.1;  // inside the windows of cells 2..8
  const std::vector<int> one{5}, far{12}, two{4, 6};
  CHECK(sl_cells_loss(actor, f.values, 0.0, one, p, target)->loss == doctest::Approx(0.01));
  CHECK(sl_cells_loss(actor, f.values, 0.0, far, p, target)->loss == doctest::Approx(0.0));
  CHECK(sl_cells_loss(actor, f.values, 0.0, two, p, target)->loss == doctest::Approx(0.02));
  CHECK(sl_step_loss(actor, f.values, 0.0, 5, p, target)->loss == doctest::Approx(0.01));
}

TEST_CASE("evolve step agrees with an Euler step of the actor's fluxes") {
  const MlpParams actor = init_params(3, actor_layer_sizes());
  ProblemInstance p = small_problem(0.01);
  ActorPolicy policy(actor);
  const Trajectory t = policy_solve(policy, p, Integrator::euler);
  const std::vector<double> next = sl_evolve_step(actor, t.row(0), 0.0, p);
  for (int j = 0; j < 16; ++j) CHECK(next[j] == doctest::Approx(t.row(1)[j]).epsilon(1e-13));
}

TEST_CASE("gradient of the one-step loss matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = gradcheck::sl_fixture(seed);
    CAPTURE(seed);
    CHECK(r.checked >= 40);
    CHECK(r.worst < 1e-5);
  }
}

TEST_CASE("non-finite steps are reported as missing losses") {
  const MlpParams actor = init_params(4, actor_layer_sizes());
  const ProblemInstance p = small_problem();
  std::vector<double> field(16, 1.0), target(16, 1.0);
  field[3] = INFINITY;
  CHECK_FALSE(sl_cells_loss(actor, field, 0.0, all_cells(16), p, target).has_value());
}

TEST_CASE("short supervised run lowers the loss") {
  ProblemFamily family;
  EpisodeSampler sampler(family, {0, 1, 2}, {{0.04, 0.004}}, 0.2, 0.2, ReferenceOptions{0.004, 0.0004, 0.5});
  SlConfig cfg;
  cfg.iterations = 30;
  cfg.learning_rate = 1e-3;
  cfg.eval_every = 0;
  const SlResult r = sl_train(sampler, cfg, {});
  REQUIRE(r.log.size() == 30);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += r.log[i].mean_loss;
    tail += r.log[25 + i].mean_loss;
  }
  CHECK(tail < head);
  CHECK(r.last.method == "sl");
  CHECK(sl_log_csv(r.log).rfind("episode,", 0) == 0);
}

TEST_CASE("configuration validation") {
  SlConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
