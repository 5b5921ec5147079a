#include "react/nn.hpp"

#include "react/errors.hpp"
#include "react/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace react::nn {

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("mlp: input and output dims must be >= 1");
  for (auto h : hidden_dims)
    if (h == 0) throw ConfigError("mlp: hidden dims must be >= 1");
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t total = 0;
  std::size_t prev = input_dim;
  for (auto h : hidden_dims) {
    total += prev * h + h;
    prev = h;
  }
  return total + prev * output_dim + output_dim;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t prev = spec_.input_dim;
  auto add = [&](std::size_t out) {
    weights_.emplace_back(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(prev));
    biases_.emplace_back(static_cast<Eigen::Index>(out), 1);
    prev = out;
  };
  for (auto h : spec_.hidden_dims) add(h);
  add(spec_.output_dim);
}

void Mlp::init_he_uniform(Rng& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& W = weights_[l].value;
    const double bound = std::sqrt(6.0 / static_cast<double>(W.cols()));
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
    biases_[l].value.setZero();
  }
  zero_grad();
}

void Mlp::zero_grad() {
  for (auto& w : weights_) w.zero_grad();
  for (auto& b : biases_) b.zero_grad();
}

std::vector<ParamTensor*> Mlp::params() {
  std::vector<ParamTensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const ParamTensor*> Mlp::params() const {
  std::vector<const ParamTensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

Vector Mlp::forward(std::span<const double> input, MlpTape* tape) const {
  if (input.size() != spec_.input_dim) {
    std::ostringstream msg;
    msg << "mlp: input length " << input.size() << " != " << spec_.input_dim;
    throw ConfigError(msg.str());
  }
  Vector a = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  if (tape != nullptr) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  const std::size_t L = weights_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Vector z(weights_[l].value.rows());
    kernels::ref::affine(weights_[l].value, biases_[l].value, a.data(), z.data());
    if (tape != nullptr) tape->inputs.push_back(a);
    if (l + 1 < L) {
      if (tape != nullptr) tape->pre.push_back(z);
      kernels::ref::relu(z.data(), static_cast<std::size_t>(z.size()));
    }
    a = std::move(z);
  }
  return a;
}

Vector Mlp::backward(const MlpTape& tape, std::span<const double> upstream) {
  const std::size_t L = weights_.size();
  if (tape.inputs.size() != L || upstream.size() != spec_.output_dim)
    throw Error("mlp backward: tape/upstream shape mismatch");
  Vector g = Eigen::Map<const Vector>(upstream.data(), static_cast<Eigen::Index>(upstream.size()));
  for (std::size_t l = L; l-- > 0;) {
    Vector din(weights_[l].value.cols());
    kernels::ref::affine_backward(weights_[l].value, tape.inputs[l].data(), g.data(), weights_[l].grad,
                                  biases_[l].grad, din.data());
    if (l > 0) kernels::ref::relu_backward(tape.pre[l - 1].data(), din.data(), static_cast<std::size_t>(din.size()));
    g = std::move(din);
  }
  return g;
}

Matrix Mlp::forward_batch(const Matrix& input, BatchTape* tape, double dropout_rate, Rng* rng) const {
  if (static_cast<std::size_t>(input.rows()) != spec_.input_dim) {
    std::ostringstream msg;
    msg << "mlp: batch input rows " << input.rows() << " != " << spec_.input_dim;
    throw ConfigError(msg.str());
  }
  const bool drop = dropout_rate > 0.0;
  if (drop && rng == nullptr) throw ConfigError("mlp: dropout requires a generator");
  if (tape != nullptr) {
    tape->inputs.clear();
    tape->pre.clear();
    tape->dropout.clear();
  }
  const std::size_t L = weights_.size();
  Matrix a = input;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z;
    kernels::par::affine(weights_[l].value, biases_[l].value, a, z);
    if (tape != nullptr) tape->inputs.push_back(std::move(a));
    if (l + 1 < L) {
      if (tape != nullptr) tape->pre.push_back(z);
      kernels::par::relu(z);
      if (drop) {
        Matrix mask(z.rows(), z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c)
          mask.col(c) = dropout_mask(static_cast<std::size_t>(z.rows()), dropout_rate, *rng);
        kernels::par::hadamard(z, mask);
        if (tape != nullptr) tape->dropout.push_back(std::move(mask));
      }
    }
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::backward_batch(const BatchTape& tape, const Matrix& upstream, bool want_input_grad) {
  const std::size_t L = weights_.size();
  if (tape.inputs.size() != L || static_cast<std::size_t>(upstream.rows()) != spec_.output_dim ||
      upstream.cols() != tape.inputs.front().cols())
    throw Error("mlp backward: tape/upstream shape mismatch");
  Matrix g = upstream;
  for (std::size_t l = L; l-- > 0;) {
    const bool need_dx = l > 0 || want_input_grad;
    Matrix dx;
    kernels::par::affine_backward(weights_[l].value, tape.inputs[l], g, weights_[l].grad, biases_[l].grad,
                                  need_dx ? &dx : nullptr);
    if (l > 0) {
      if (!tape.dropout.empty()) kernels::par::hadamard(dx, tape.dropout[l - 1]);
      kernels::par::relu_backward(tape.pre[l - 1], dx);
    }
    g = std::move(dx);
  }
  return g;
}

Vector softmax(std::span<const double> logits) {
  Vector p(static_cast<Eigen::Index>(logits.size()));
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[static_cast<Eigen::Index>(k)] = std::exp(logits[k] - mx);
    sum += p[static_cast<Eigen::Index>(k)];
  }
  return p / sum;
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw InputError("cross entropy: label out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);
  CrossEntropy out;
  out.loss = log_z - logits[static_cast<std::size_t>(label)];
  out.grad_logits = softmax(logits);
  out.grad_logits[label] -= 1.0;
  return out;
}

Matrix softmax_batch(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    p.col(c) = (logits.col(c).array() - mx).exp().matrix();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

Vector softmax_cross_entropy_batch(const Matrix& logits, std::span<const int> labels,
                                   std::span<const double> weights, Matrix& grad) {
  const Eigen::Index n = logits.cols();
  if (labels.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n))
    throw InputError("cross entropy: labels/weights length mismatch");
  for (int y : labels)
    if (y < 0 || y >= logits.rows()) throw InputError("cross entropy: label out of range");
  grad.resize(logits.rows(), n);
  Vector losses(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < n; ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    const double mx = logits.col(c).maxCoeff();
    Vector e = (logits.col(c).array() - mx).exp().matrix();
    const double sum = e.sum();
    losses[c] = mx + std::log(sum) - logits(y, c);
    e /= sum;
    e[y] -= 1.0;
    grad.col(c) = e * weights[static_cast<std::size_t>(c)];
  }
  return losses;
}

Vector sinusoidal_time_embedding(std::size_t t, std::size_t T, std::size_t D) {
  if (D % 2 != 0) throw ConfigError("time embedding: dimension must be even");
  if (t > T) throw InputError("time embedding: t > T");
  Vector e(static_cast<Eigen::Index>(D));
  for (std::size_t i = 0; i < D / 2; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(D));
    const double arg = static_cast<double>(t) / freq;
    e[static_cast<Eigen::Index>(2 * i)] = std::sin(arg);
    e[static_cast<Eigen::Index>(2 * i + 1)] = std::cos(arg);
  }
  return e;
}

Vector dropout_mask(std::size_t dim, double rate, Rng& rng) {
  if (!(rate >= 0.0) || rate >= 1.0) throw ConfigError("dropout: rate must lie in [0, 1)");
  const double keep = 1.0 / (1.0 - rate);
  Vector m(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) m[static_cast<Eigen::Index>(i)] = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

double finite_difference_check(const std::function<double(bool)>& loss_fn,
                               std::span<ParamTensor* const> params, double eps) {
  if (!(eps > 0.0)) throw InputError("finite difference: eps must be positive");
  for (auto* p : params) p->zero_grad();
  const double base = loss_fn(true);
  if (!std::isfinite(base)) throw Error("finite difference: non-finite loss");
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& v = params[k]->value;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double saved = v.data()[i];
      v.data()[i] = saved + eps;
      const double up = loss_fn(false);
      v.data()[i] = saved - eps;
      const double down = loss_fn(false);
      v.data()[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) throw Error("finite difference: non-finite loss");
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, relative_error(analytic[k].data()[i], numeric));
    }
  }
  return worst;
}

}  // namespace react::nn
