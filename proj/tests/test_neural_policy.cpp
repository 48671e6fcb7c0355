#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gradcheck.hpp"
#include "rlweno/policy.hpp"

using namespace rlweno;

TEST_CASE("network shapes") {
  CHECK(actor_layer_sizes() == std::vector<int>{7, 64, 64, 64, 64, 64, 64, 4});
  CHECK(critic_layer_sizes() == std::vector<int>{22, 64, 64, 64, 64, 64, 64, 1});
  const MlpParams a = init_params(1, actor_layer_sizes());
  CHECK(a.parameter_count() == 7 * 64 + 64 + 5 * (64 * 64 + 64) + 64 * 4 + 4);
  CHECK(a.input_size() == 7);
  CHECK(a.output_size() == 4);
  const MlpParams b = init_params(1, actor_layer_sizes());
  CHECK(max_abs_difference(a, b) == 0.0);
  CHECK(max_abs_difference(a, init_params(2, actor_layer_sizes())) > 0.0);
}

TEST_CASE("actor backward pass matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = gradcheck::actor_fixture(seed);
    CAPTURE(seed);
    CHECK(r.checked >= 40);
    CHECK(r.worst < 1e-5);
  }
}

TEST_CASE("critic backward pass matches finite differences") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto r = gradcheck::critic_fixture(seed);
    CAPTURE(seed);
    CHECK(r.checked >= 70);
    CHECK(r.worst < 1e-5);
  }
}

TEST_CASE("softmax head") {
  const std::array<double, 4> logits{1.0, 2.0, 3.0, 4.0};
  const auto w = softmax_head(logits);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) total += std::exp(logits[i]);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(std::exp(logits[i]) / total));
  const std::array<double, 4> huge{1000.0, 0.0, 0.0, 0.0};
  CHECK(softmax_head(huge)[0] == doctest::Approx(1.0));
}

TEST_CASE("features are invariant to affine rescaling of the window") {
  const InterfaceState s{0.1, 0.4, -0.3, 0.8, 0.2, 0.5, 0.7};
  InterfaceState t = s;
  for (int k = 0; k < 6; ++k) t[k] = 3.0 * s[k] + 5.0;
  const auto fs = interface_features(s), ft = interface_features(t);
  for (int k = 0; k < 6; ++k) CHECK(fs[k] == doctest::Approx(ft[k]).epsilon(1e-7));
  CHECK(fs[6] == doctest::Approx(std::tanh(0.7)));
  double worst = 0.0;
  for (int k = 0; k < 6; ++k) worst = std::max(worst, std::abs(fs[k]));
  CHECK(worst == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("actor actions lie on two simplices") {
  const MlpParams a = init_params(3, actor_layer_sizes());
  const CellState c{{1, 2, 3, 4, 5, 6, 0.5}, {2, 3, 4, 5, 6, 7, -0.5}};
  const WeightAction w = actor_act(a, c);
  CHECK(on_simplex(w.left()));
  CHECK(on_simplex(w.right()));
  ActorPolicy policy(a);
  std::vector<SimplexBlock> out(2);
  const std::vector<InterfaceState> s{c.left, c.right};
  policy.act(s, out);
  for (int r = 0; r < 4; ++r) {
    CHECK(out[0][r] == doctest::Approx(w.w[r]));
    CHECK(out[1][r] == doctest::Approx(w.w[4 + r]));
  }
}

TEST_CASE("random simplex samples are uniform on the simplex") {
  std::mt19937_64 rng(9);
  std::array<double, 4> mean{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto w = uniform_simplex_sample(rng);
    CHECK(on_simplex(w));
    for (int r = 0; r < 4; ++r) mean[r] += w[r] / n;
  }
  for (double m : mean) CHECK(m == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("adam moves parameters against the gradient") {
  MlpParams p = init_params(4, std::vector<int>{2, 3, 1});
  const MlpParams before = p;
  GradientSet g = zeros_like(p);
  g.layers[0].weight(0, 0) = 2.0;
  g.layers[1].bias[0] = -1.0;
  Adam opt(p, 0.01);
  opt.step(p, g);
  CHECK(p.layers[0].weight(0, 0) == doctest::Approx(before.layers[0].weight(0, 0) - 0.01).epsilon(1e-6));
  CHECK(p.layers[1].bias[0] == doctest::Approx(before.layers[1].bias[0] + 0.01).epsilon(1e-6));
  CHECK(p.layers[0].weight(1, 1) == before.layers[0].weight(1, 1));
  CHECK(opt.steps() == 1);
}

TEST_CASE("polyak averaging, axpy and scale") {
  MlpParams target = init_params(5, std::vector<int>{3, 4, 2});
  const MlpParams online = init_params(6, std::vector<int>{3, 4, 2});
  const MlpParams original = target;
  soft_update(target, online, 0.0);
  CHECK(max_abs_difference(target, original) == 0.0);
  soft_update(target, online, 0.25);
  CHECK(target.layers[1].weight(0, 1) ==
        doctest::Approx(0.25 * online.layers[1].weight(0, 1) + 0.75 * original.layers[1].weight(0, 1)));
  soft_update(target, online, 1.0);
  CHECK(max_abs_difference(target, online) == 0.0);
  MlpParams z = zeros_like(online);
  axpy(z, 2.0, online);
  scale(z, 0.5);
  CHECK(max_abs_difference(z, online) < 1e-15);
}

TEST_CASE("checkpoints round trip exactly") {
  Checkpoint c;
  c.params = gradcheck::random_params(7, actor_layer_sizes());
  c.method = "td3";
  c.seed = 42;
  c.training_steps = 12345;
  c.extra = {{"note", "x"}};
  const auto path = std::filesystem::temp_directory_path() / "rlweno_ckpt_test.json";
  save_checkpoint(path, c);
  const Checkpoint d = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(max_abs_difference(c.params, d.params) == 0.0);
  CHECK(d.method == "td3");
  CHECK(d.seed == 42);
  CHECK(d.training_steps == 12345);
  CHECK(d.extra == c.extra);
  nlohmann::json bad = checkpoint_to_json(c);
  bad["format_version"] = 99;
  CHECK_THROWS_AS(checkpoint_from_json(bad), ConfigError);
  bad = checkpoint_to_json(c);
  bad["layers"][0]["rows"] = 3;
  CHECK_THROWS_AS(checkpoint_from_json(bad), ConfigError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), ConfigError);
}
