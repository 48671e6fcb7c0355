#pragma once

// Fully connected ReLU networks with hand-written reverse mode, batched over
// columns (each column of an input matrix is one sample).

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rlweno {

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;    // fan_out
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::vector<int> layer_sizes() const;
  int input_size() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Gradients share the parameter layout.
using GradientSet = MlpParams;

/// Pre-activations and activations per layer; activations[0] is the input.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre_activations;
  std::vector<Eigen::MatrixXd> activations;
};

/// Glorot-uniform weights, zero biases. Deterministic per seed.
MlpParams init_params(std::uint64_t seed, std::span<const int> layer_sizes);

/// Zero-valued parameters with the same shapes as `like`.
MlpParams zeros_like(const MlpParams& like);

/// Affine + ReLU on hidden layers, affine output. `input` is in x batch.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

struct BackwardResult {
  GradientSet gradients;
  Eigen::MatrixXd input_gradient;
};

/// Exact gradients of sum(output .* output_gradient) with respect to the
/// parameters and the input, summed over the batch.
BackwardResult backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& output_gradient);

/// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);
std::array<double, 4> softmax_head(std::span<const double, 4> logits);
/// Pulls dL/dprobs back to dL/dlogits for column-wise softmax outputs.
Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& grad_probs);

/// params += scale * other, layer by layer.
void axpy(MlpParams& params, double scale, const MlpParams& other);

void scale(MlpParams& params, double factor);

/// Polyak averaging: target = tau * online + (1 - tau) * target.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

double max_abs_difference(const MlpParams& a, const MlpParams& b);

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(const MlpParams& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(MlpParams& params, const GradientSet& gradients);
  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

 private:
  MlpParams m_, v_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
};

}  // namespace rlweno
