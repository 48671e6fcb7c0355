#include "rlweno/mlp.hpp"

#include <cmath>
#include <random>

#include "rlweno/solver_core.hpp"

namespace rlweno {

std::vector<int> MlpParams::layer_sizes() const {
  std::vector<int> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(input_size());
  for (const auto& l : layers) sizes.push_back(static_cast<int>(l.weight.rows()));
  return sizes;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

MlpParams init_params(std::uint64_t seed, std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) throw ContractError("init_params: need at least input and output sizes");
  std::mt19937_64 rng(seed);
  MlpParams p;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int fan_in = layer_sizes[i], fan_out = layer_sizes[i + 1];
    if (fan_in <= 0 || fan_out <= 0) throw ContractError("init_params: layer sizes must be positive");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (int c = 0; c < fan_in; ++c) {
      for (int r = 0; r < fan_out; ++r) layer.weight(r, c) = dist(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& like) {
  MlpParams z;
  for (const auto& l : like.layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (params.layers.empty()) throw ContractError("forward: empty network");
  if (input.rows() != params.input_size()) throw ContractError("forward: input dimension mismatch");
  if (cache) {
    cache->pre_activations.clear();
    cache->activations.clear();
    cache->activations.push_back(input);
  }
  Eigen::MatrixXd x = input;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = l.weight * x;
    z.colwise() += l.bias;
    if (i == last) {
      if (cache) cache->pre_activations.push_back(z);
      return z;
    }
    x = z.cwiseMax(0.0);
    if (cache) {
      cache->pre_activations.push_back(std::move(z));
      cache->activations.push_back(x);
    }
  }
  return x;
}

BackwardResult backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& output_gradient) {
  const std::size_t n_layers = params.layers.size();
  if (cache.pre_activations.size() != n_layers || cache.activations.size() != n_layers) {
    throw ContractError("backward: cache does not match the network");
  }
  if (output_gradient.rows() != params.output_size() ||
      output_gradient.cols() != cache.activations.front().cols()) {
    throw ContractError("backward: output gradient shape mismatch");
  }
  BackwardResult out;
  out.gradients.layers.resize(n_layers);
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& l = params.layers[k];
    auto& g = out.gradients.layers[k];
    g.weight.noalias() = delta * cache.activations[k].transpose();
    g.bias = delta.rowwise().sum();
    Eigen::MatrixXd upstream = l.weight.transpose() * delta;
    if (k == 0) {
      out.input_gradient = std::move(upstream);
    } else {
      delta = upstream.cwiseProduct((cache.pre_activations[k - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - m).exp();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

std::array<double, 4> softmax_head(std::span<const double, 4> logits) {
  const double m = std::max(std::max(logits[0], logits[1]), std::max(logits[2], logits[3]));
  std::array<double, 4> p{};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& grad_probs) {
  // dL/dz_i = p_i (g_i - sum_k p_k g_k)
  const Eigen::RowVectorXd dot = probs.cwiseProduct(grad_probs).colwise().sum();
  return probs.cwiseProduct(grad_probs - dot.replicate(probs.rows(), 1));
}

void axpy(MlpParams& params, double scale, const MlpParams& other) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    params.layers[i].weight += scale * other.layers[i].weight;
    params.layers[i].bias += scale * other.layers[i].bias;
  }
}

void scale(MlpParams& params, double factor) {
  for (auto& l : params.layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& o = online.layers[i];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

double max_abs_difference(const MlpParams& a, const MlpParams& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    m = std::max(m, (a.layers[i].weight - b.layers[i].weight).cwiseAbs().maxCoeff());
    m = std::max(m, (a.layers[i].bias - b.layers[i].bias).cwiseAbs().maxCoeff());
  }
  return m;
}

Adam::Adam(const MlpParams& like, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(zeros_like(like)), v_(zeros_like(like)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(MlpParams& params, const GradientSet& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  auto update = [&](auto& p, auto& m, auto& v, const auto& grad) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseAbs2();
    p.array() -= step * m.array() / (v.array().sqrt() + eps_);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, m_.layers[i].weight, v_.layers[i].weight, g.layers[i].weight);
    update(params.layers[i].bias, m_.layers[i].bias, v_.layers[i].bias, g.layers[i].bias);
  }
}

}  // namespace rlweno
