#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "procstruct/eventlog.hpp"

namespace procstruct::nn {

// Gate blocks inside the stacked 4H rows, in this order.
enum Gate : Eigen::Index { kInputGate = 0, kForgetGate = 1, kCandidate = 2, kOutputGate = 3 };

struct LstmLayer {
  Eigen::MatrixXd w_input;      // 4H x input_dim
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd bias;         // 4H
};

struct NetworkShape {
  std::size_t vocab_size = 0;     // includes BOS, EOS and PAD
  std::size_t pad_token = 0;
  std::size_t embedding_dim = 0;  // 0: one-hot inputs
  std::size_t n_layers = 1;       // 0 gives a softmax regression on the last token
  std::size_t hidden_size = 32;
  std::size_t window = 10;

  std::size_t input_dim() const noexcept { return embedding_dim ? embedding_dim : vocab_size; }
  std::size_t feature_dim() const noexcept { return n_layers ? hidden_size : input_dim(); }

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct NetworkParams {
  NetworkShape shape;
  Eigen::MatrixXd embedding;  // embedding_dim x vocab_size, one column per token
  std::vector<LstmLayer> layers;
  Eigen::MatrixXd w_out;      // vocab_size x feature_dim
  Eigen::VectorXd b_out;      // vocab_size
};

/// Smallest d with d^4 >= n, i.e. ceil of the fourth root.
std::size_t embedding_dim_for(std::size_t n);

/// Glorot-uniform weights, zero biases except forget-gate bias 1.
NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed);
NetworkParams zeros_like(const NetworkParams& params);

/// Flat view of one parameter tensor (column-major for matrices).
template <class T>
struct BasicTensorView {
  std::string name;
  std::span<T> values;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool regularized = false;  // weight matrices yes, biases no
};
using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

std::vector<TensorView> tensors(NetworkParams& params);
std::vector<ConstTensorView> tensors(const NetworkParams& params);
std::size_t parameter_count(const NetworkParams& params);

struct RegularizationSpec {
  double l1 = 0.0;
  double l2 = 0.0;
  double dropout = 0.0;  // in [0, 1)
};

enum class Mode { kTrain, kInfer };

/// Next-token distribution for one window of tokens. PAD positions are
/// skipped: they leave the recurrent state untouched. In train mode a seeded
/// inverted-dropout mask is applied to the top recurrent output.
Eigen::VectorXd forward(const NetworkParams& params, std::span<const Token> prefix,
                        Mode mode = Mode::kInfer, double dropout = 0.0,
                        std::uint64_t dropout_seed = 0);

/// Inference over `batch` windows stored back to back; returns vocab x batch probabilities.
Eigen::MatrixXd forward_batch(const NetworkParams& params, std::span<const Token> windows,
                              std::size_t batch);

struct LossAndGradients {
  double loss = 0.0;           // cross_entropy + penalty
  double cross_entropy = 0.0;  // batch mean of -log p(target)
  double penalty = 0.0;
  NetworkParams gradients;
};

/// Throws DivergenceError (epoch 0) when the loss is not finite.
LossAndGradients loss_and_gradients(const NetworkParams& params,
                                    std::span<const PrefixSample> batch,
                                    const RegularizationSpec& reg, std::uint64_t dropout_seed);

double penalty(const NetworkParams& params, const RegularizationSpec& reg);

struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.005;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

OptimizerState make_optimizer(std::span<const std::size_t> tensor_sizes, double learning_rate);
OptimizerState make_optimizer(const NetworkParams& params, double learning_rate);

/// Bias-corrected adaptive-moment update over matching lists of tensors.
void adam_step(OptimizerState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> gradients);
void adam_step(OptimizerState& state, NetworkParams& params, const NetworkParams& gradients);

/// Central differences at eps = 1e-5 resolve gradients to roughly 1e-10, so
/// entries below this magnitude are compared on an absolute scale.
inline constexpr double kGradientFloor = 1e-6;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_tensor;
};

/// Compares analytic gradients with central differences on a seeded random
/// subset of `samples` parameters (all of them if fewer exist). The relative
/// error is |a - n| / max(|a|, |n|, kGradientFloor). Dropout in `reg` must be zero.
GradientCheckResult gradient_check(const NetworkParams& params,
                                   std::span<const PrefixSample> batch,
                                   const RegularizationSpec& reg, double epsilon,
                                   std::uint64_t seed, std::size_t samples = 200);

}  // namespace procstruct::nn
