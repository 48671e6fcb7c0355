#include "rlweno/policy.hpp"

#include <cmath>
#include <fstream>

namespace rlweno {

std::vector<int> actor_layer_sizes() {
  std::vector<int> s{kInterfaceFeatures};
  s.insert(s.end(), kHiddenLayers, kHiddenWidth);
  s.push_back(4);
  return s;
}

std::vector<int> critic_layer_sizes() {
  std::vector<int> s{kCellFeatures + kActionSize};
  s.insert(s.end(), kHiddenLayers, kHiddenWidth);
  s.push_back(1);
  return s;
}

Eigen::Matrix<double, kInterfaceFeatures, 1> interface_features(const InterfaceState& s) {
  double mean = 0.0;
  for (int k = 0; k < 6; ++k) mean += s[k];
  mean /= 6.0;
  double spread = 0.0;
  for (int k = 0; k < 6; ++k) spread = std::max(spread, std::abs(s[k] - mean));
  const double inv = 1.0 / (spread + 1e-8);
  Eigen::Matrix<double, kInterfaceFeatures, 1> out;
  for (int k = 0; k < 6; ++k) out[k] = (s[k] - mean) * inv;
  out[6] = std::tanh(s[6]);
  return out;
}

Eigen::Matrix<double, kInterfaceFeatures, 1> critic_features(const InterfaceState& s) {
  Eigen::Matrix<double, kInterfaceFeatures, 1> out;
  for (int k = 0; k < kInterfaceFeatures; ++k) out[k] = std::asinh(s[k]);
  return out;
}

Eigen::MatrixXd feature_matrix(std::span<const InterfaceState> states) {
  Eigen::MatrixXd x(kInterfaceFeatures, static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = interface_features(states[i]);
  return x;
}

Eigen::MatrixXd actor_logits(const MlpParams& actor, std::span<const InterfaceState> states) {
  return forward(actor, feature_matrix(states));
}

WeightAction actor_act(const MlpParams& actor, const CellState& state) {
  const std::array<InterfaceState, 2> halves{state.left, state.right};
  const Eigen::MatrixXd probs = softmax_columns(actor_logits(actor, halves));
  WeightAction a;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 4; ++r) a.w[4 * c + r] = probs(r, c);
  }
  return a;
}

Eigen::MatrixXd critic_input(std::span<const CellState> states, const Eigen::MatrixXd& actions) {
  const auto b = static_cast<Eigen::Index>(states.size());
  if (actions.rows() != kActionSize || actions.cols() != b) throw ContractError("critic_input: action shape mismatch");
  Eigen::MatrixXd x(kCellFeatures + kActionSize, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    x.block<kInterfaceFeatures, 1>(0, i) = critic_features(states[i].left);
    x.block<kInterfaceFeatures, 1>(kInterfaceFeatures, i) = critic_features(states[i].right);
  }
  x.bottomRows(kActionSize) = actions;
  return x;
}

Eigen::MatrixXd critic_input(std::span<const CellState> states, std::span<const WeightAction> actions) {
  Eigen::MatrixXd a(kActionSize, static_cast<Eigen::Index>(actions.size()));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (int r = 0; r < kActionSize; ++r) a(r, static_cast<Eigen::Index>(i)) = actions[i].w[r];
  }
  return critic_input(states, a);
}

namespace {

void write_columns(const Eigen::MatrixXd& probs, std::span<SimplexBlock> out) {
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    for (int r = 0; r < 4; ++r) out[c][r] = probs(r, c);
  }
}

}  // namespace

void ActorPolicy::act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) {
  write_columns(softmax_columns(actor_logits(*actor_, states)), out);
}

void NoisyActorPolicy::act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) {
  Eigen::MatrixXd logits = actor_logits(*actor_, states);
  std::normal_distribution<double> noise(0.0, noise_std_);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    for (int r = 0; r < 4; ++r) logits(r, c) += noise(rng_);
  }
  write_columns(softmax_columns(logits), out);
}

SimplexBlock uniform_simplex_sample(std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  SimplexBlock w;
  double total = 0.0;
  for (auto& v : w) {
    v = expo(rng);
    total += v;
  }
  for (auto& v : w) v /= total;
  return w;
}

void RandomSimplexPolicy::act(std::span<const InterfaceState> states, std::span<SimplexBlock> out) {
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = uniform_simplex_sample(rng_);
}

nlohmann::json params_to_json(const MlpParams& params) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : params.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"layer_sizes", params.layer_sizes()}, {"layers", layers}};
}

MlpParams params_from_json(const nlohmann::json& j) {
  MlpParams p;
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  const auto& layers = j.at("layers");
  if (sizes.size() != layers.size() + 1) throw ConfigError("checkpoint: layer_sizes does not match layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const int rows = l.at("rows").get<int>(), cols = l.at("cols").get<int>();
    if (rows != sizes[i + 1] || cols != sizes[i]) throw ConfigError("checkpoint: inconsistent layer shape");
    const auto w = l.at("weight").get<std::vector<double>>();
    const auto b = l.at("bias").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows) {
      throw ConfigError("checkpoint: weight/bias length mismatch");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) layer.weight(r, c) = w[static_cast<std::size_t>(r) * cols + c];
      layer.bias[r] = b[r];
    }
    p.layers.push_back(std::move(layer));
  }
  if (!p.all_finite()) throw ConfigError("checkpoint: non-finite parameters");
  return p;
}

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json j = params_to_json(ckpt.params);
  j["format_version"] = kCheckpointFormatVersion;
  j["method"] = ckpt.method;
  j["seed"] = ckpt.seed;
  j["training_steps"] = ckpt.training_steps;
  j["features"] = "window-centred-scaled+tanh-roe";
  j["extra"] = ckpt.extra;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != kCheckpointFormatVersion) throw ConfigError("checkpoint: unsupported format_version");
  Checkpoint c;
  c.params = params_from_json(j);
  c.method = j.at("method").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.training_steps = j.at("training_steps").get<std::int64_t>();
  c.extra = j.value("extra", nlohmann::json::object());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << checkpoint_to_json(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("failed to write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace rlweno
