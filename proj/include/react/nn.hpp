#pragma once

#include "react/rng.hpp"
#include "react/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace react::nn {

// A learnable tensor and its gradient accumulator. Vectors are stored as
// n x 1 matrices.
struct ParamTensor {
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(Eigen::Index rows, Eigen::Index cols)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

enum class Activation { relu };

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 0;
  Activation activation = Activation::relu;

  void validate() const;
  // Closed-form number of scalars in all weights and biases.
  std::size_t parameter_count() const;
};

// Activation record of one single-sample forward pass.
struct MlpTape {
  std::vector<Vector> inputs;  // input of each layer (inputs[0] is the network input)
  std::vector<Vector> pre;     // pre-activation of each hidden layer
};

// Activation record of one batched forward pass; columns are samples.
struct BatchTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  std::vector<Matrix> dropout;  // empty when dropout was off
};

// Fully connected ReLU network. Hidden layers use ReLU, the output layer is
// affine. Weights are (out x in).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return weights_.size(); }

  // He-uniform weights, zero biases.
  void init_he_uniform(Rng& rng);
  void zero_grad();

  // Weight/bias pairs in layer order: [W0, b0, W1, b1, ...].
  std::vector<ParamTensor*> params();
  std::vector<const ParamTensor*> params() const;

  // Single-sample reference path (serial, naive kernels).
  Vector forward(std::span<const double> input, MlpTape* tape = nullptr) const;
  // Accumulates parameter gradients; returns the gradient w.r.t. the input.
  Vector backward(const MlpTape& tape, std::span<const double> upstream);

  // Batched path. `dropout_rate` > 0 applies inverted dropout after every
  // hidden activation, with masks drawn from `rng`.
  Matrix forward_batch(const Matrix& input, BatchTape* tape = nullptr, double dropout_rate = 0.0,
                       Rng* rng = nullptr) const;
  // Accumulates parameter gradients. Returns dL/dinput when want_input_grad.
  Matrix backward_batch(const BatchTape& tape, const Matrix& upstream, bool want_input_grad = true);

 private:
  MlpSpec spec_;
  std::vector<ParamTensor> weights_;
  std::vector<ParamTensor> biases_;
};

struct CrossEntropy {
  double loss = 0.0;
  Vector grad_logits;
};

Vector softmax(std::span<const double> logits);
CrossEntropy softmax_cross_entropy(std::span<const double> logits, int label);

// Column-wise softmax cross-entropy. Writes dLoss/dlogits scaled by `weights`
// (per column) into grad and returns the unweighted per-column losses.
Vector softmax_cross_entropy_batch(const Matrix& logits, std::span<const int> labels,
                                   std::span<const double> weights, Matrix& grad);
Matrix softmax_batch(const Matrix& logits);

// Entry 2i = sin(t / 10000^(2i/D)), entry 2i+1 = cos(same).
Vector sinusoidal_time_embedding(std::size_t t, std::size_t T, std::size_t D);

// Inverted dropout: 0 with probability `rate`, else 1/(1-rate).
Vector dropout_mask(std::size_t dim, double rate, Rng& rng);

// Gradient oracle. `loss_fn(true)` must zero and then fill the analytic
// gradients of every tensor in `params`; `loss_fn(false)` just evaluates.
// Returns the worst relative error against central differences.
double finite_difference_check(const std::function<double(bool)>& loss_fn,
                               std::span<ParamTensor* const> params, double eps);

// Relative error used by the gradient oracle.
double relative_error(double analytic, double numeric);

}  // namespace react::nn
