#include "helpers.hpp"
#include "react/errors.hpp"
#include "react/kernels.hpp"
#include "react/nn.hpp"

#include <doctest.h>

#include <cmath>

using namespace react;
using nn::Mlp;
using nn::MlpSpec;

namespace {

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Mlp random_mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t out, std::uint64_t seed) {
  Mlp m(MlpSpec{in, std::move(hidden), out});
  Rng rng(seed);
  m.init_he_uniform(rng);
  // nonzero biases so the bias path is exercised
  for (std::size_t l = 1; l < m.params().size(); l += 2)
    for (Eigen::Index i = 0; i < m.params()[l]->value.size(); ++i) m.params()[l]->value(i) = 0.1 * rng.normal();
  return m;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("mlp: zero network gives zero output") {
  Mlp m(MlpSpec{4, {3, 2}, 2});
  Vector x = Vector::Constant(4, 1.5);
  const Vector y = m.forward(view(x));
  CHECK(y.isZero(0.0));
}

TEST_CASE("mlp: single affine layer") {
  Mlp m(MlpSpec{1, {}, 1});
  m.params()[0]->value(0, 0) = 2.0;
  Vector x = Vector::Constant(1, 3.0);
  CHECK(m.forward(view(x))[0] == doctest::Approx(6.0));
}

TEST_CASE("mlp: affine backward is g x^T and g") {
  Mlp m = random_mlp(3, {}, 2, 5);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  Vector g(2);
  g << 0.3, -1.1;
  nn::MlpTape tape;
  m.forward(view(x), &tape);
  m.zero_grad();
  const Vector dx = m.backward(tape, view(g));
  const Matrix expected_dW = g * x.transpose();
  CHECK((m.params()[0]->grad - expected_dW).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((m.params()[1]->grad - g).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((dx - m.params()[0]->value.transpose() * g).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mlp: zero upstream leaves gradients zero") {
  Mlp m = random_mlp(5, {4, 3}, 2, 6);
  Rng rng(1);
  const Vector x = random_vector(5, rng);
  nn::MlpTape tape;
  m.forward(view(x), &tape);
  m.zero_grad();
  m.backward(tape, view(Vector::Zero(2)));
  for (auto* p : m.params()) CHECK(p->grad.isZero(0.0));
}

TEST_CASE("mlp: shape errors") {
  CHECK_THROWS_AS(Mlp(MlpSpec{0, {3}, 2}), ConfigError);
  CHECK_THROWS_AS(Mlp(MlpSpec{3, {0}, 2}), ConfigError);
  Mlp m(MlpSpec{3, {2}, 1});
  Vector x = Vector::Zero(4);
  CHECK_THROWS_AS(m.forward(view(x)), ConfigError);
}

TEST_CASE("mlp: parameter count matches the closed form") {
  const MlpSpec s{150, {512, 256, 128}, 80};
  CHECK(s.parameter_count() == 150 * 512 + 512 + 512 * 256 + 256 + 256 * 128 + 128 + 128 * 80 + 80);
  Mlp m(s);
  std::size_t n = 0;
  for (auto* p : m.params()) n += static_cast<std::size_t>(p->size());
  CHECK(n == s.parameter_count());
}

TEST_CASE("mlp: He-uniform init respects the bound and is seeded") {
  Mlp a(MlpSpec{50, {20}, 3}), b(MlpSpec{50, {20}, 3});
  Rng r1(9), r2(9);
  a.init_he_uniform(r1);
  b.init_he_uniform(r2);
  const double bound = std::sqrt(6.0 / 50.0);
  CHECK(a.params()[0]->value.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.params()[1]->value.isZero(0.0));
  for (std::size_t i = 0; i < a.params().size(); ++i) CHECK(a.params()[i]->value == b.params()[i]->value);
}

TEST_CASE("mlp: gradients match central differences") {
  Mlp m = random_mlp(6, {5, 4}, 3, 11);
  Rng rng(2);
  const Vector x = random_vector(6, rng);
  const Vector w = random_vector(3, rng);
  auto params = m.params();
  const double err = nn::finite_difference_check(
      [&](bool grad) {
        nn::MlpTape tape;
        const Vector y = m.forward(view(x), grad ? &tape : nullptr);
        if (grad) {
          m.zero_grad();
          m.backward(tape, view(w));
        }
        return w.dot(y);
      },
      params, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("mlp: batched path equals the reference path") {
  Mlp m = random_mlp(7, {6, 5}, 3, 12);
  Rng rng(3);
  const Eigen::Index B = 9;
  Matrix X(7, B), G(3, B);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = rng.normal();

  nn::BatchTape bt;
  m.zero_grad();
  const Matrix Y = m.forward_batch(X, &bt);
  const Matrix dX = m.backward_batch(bt, G);
  std::vector<Matrix> batched;
  for (auto* p : m.params()) batched.push_back(p->grad);

  m.zero_grad();
  for (Eigen::Index b = 0; b < B; ++b) {
    const Vector x = X.col(b);
    const Vector g = G.col(b);
    nn::MlpTape tape;
    const Vector y = m.forward(view(x), &tape);
    CHECK((y - Y.col(b)).cwiseAbs().maxCoeff() < 1e-12);
    const Vector dx = m.backward(tape, view(g));
    CHECK((dx - dX.col(b)).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (std::size_t i = 0; i < batched.size(); ++i)
    CHECK((batched[i] - m.params()[i]->grad).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("kernels: batched affine equals the naive kernel") {
  Rng rng(4);
  Matrix W(4, 6), b(4, 1), X(6, 5);
  for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = rng.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.normal();
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
  Matrix Y;
  kernels::par::affine(W, b, X, Y);
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    Vector out(4);
    const Vector x = X.col(c);
    kernels::ref::affine(W, b, x.data(), out.data());
    CHECK((out - Y.col(c)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax cross-entropy: closed forms") {
  Vector z(2);
  z << 0.0, 0.0;
  auto ce = nn::softmax_cross_entropy(view(z), 0);
  CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ce.grad_logits[0] == doctest::Approx(-0.5));
  CHECK(ce.grad_logits[1] == doctest::Approx(0.5));

  z << 10.0, -10.0;
  ce = nn::softmax_cross_entropy(view(z), 0);
  const double p1 = 1.0 / (1.0 + std::exp(20.0));
  CHECK(ce.loss == doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-9));
  CHECK(ce.loss == doctest::Approx(2.06e-9).epsilon(0.01));
  CHECK(ce.grad_logits[0] == doctest::Approx(-p1).epsilon(1e-9));
  CHECK(ce.grad_logits[1] == doctest::Approx(p1).epsilon(1e-9));

  CHECK_THROWS_AS(nn::softmax_cross_entropy(view(z), 2), InputError);
  CHECK_THROWS_AS(nn::softmax_cross_entropy(view(z), -1), InputError);
}

TEST_CASE("softmax: large logits stay finite") {
  Vector z(3);
  z << 1000.0, 999.0, -1000.0;
  const Vector p = nn::softmax(view(z));
  CHECK(p.allFinite());
  CHECK(p.sum() == doctest::Approx(1.0));
}

TEST_CASE("softmax cross-entropy batch matches the single path") {
  Rng rng(8);
  Matrix Z(3, 4);
  for (Eigen::Index i = 0; i < Z.size(); ++i) Z(i) = 3.0 * rng.normal();
  const std::vector<int> labels{0, 2, 1, 2};
  const std::vector<double> weights{1.0, 0.5, 2.0, 0.0};
  Matrix G;
  const Vector losses = nn::softmax_cross_entropy_batch(Z, labels, weights, G);
  for (Eigen::Index b = 0; b < 4; ++b) {
    const Vector z = Z.col(b);
    const auto ce = nn::softmax_cross_entropy(view(z), labels[static_cast<std::size_t>(b)]);
    CHECK(losses[b] == doctest::Approx(ce.loss).epsilon(1e-14));
    CHECK((G.col(b) - weights[static_cast<std::size_t>(b)] * ce.grad_logits).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("time embedding") {
  const Vector e0 = nn::sinusoidal_time_embedding(0, 10, 8);
  for (Eigen::Index i = 0; i < 8; i += 2) {
    CHECK(e0[i] == 0.0);
    CHECK(e0[i + 1] == 1.0);
  }
  const Vector e1 = nn::sinusoidal_time_embedding(1, 10, 2);
  CHECK(e1[0] == doctest::Approx(std::sin(1.0)));
  CHECK(e1[1] == doctest::Approx(std::cos(1.0)));
  CHECK(e1[0] == doctest::Approx(0.8415).epsilon(1e-4));
  CHECK_THROWS_AS(nn::sinusoidal_time_embedding(1, 10, 3), ConfigError);
  CHECK_THROWS_AS(nn::sinusoidal_time_embedding(11, 10, 4), InputError);
}

TEST_CASE("dropout mask") {
  Rng a(1);
  CHECK(nn::dropout_mask(20, 0.0, a).isApprox(Vector::Ones(20)));

  Rng r1(42), r2(42);
  const Vector m = nn::dropout_mask(100000, 0.4, r1);
  CHECK(m == nn::dropout_mask(100000, 0.4, r2));
  const double zeros = static_cast<double>((m.array() == 0.0).count()) / 1e5;
  CHECK(std::abs(zeros - 0.4) < 0.01);
  for (double v : m) CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.6)));
  CHECK_THROWS_AS(nn::dropout_mask(3, 1.0, a), ConfigError);
}

TEST_CASE("finite-difference oracle") {
  nn::ParamTensor p(3, 1);
  p.value << 0.7, -1.3, 2.1;
  std::vector<nn::ParamTensor*> params{&p};

  const double quad = nn::finite_difference_check(
      [&](bool grad) {
        if (grad) p.grad = 2.0 * p.value;
        return p.value.squaredNorm();
      },
      params, 1e-5);
  CHECK(quad <= 1e-8);

  const double zero = nn::finite_difference_check([&](bool) { return 0.0; }, params, 1e-5);
  CHECK(zero == 0.0);

  const double broken = nn::finite_difference_check(
      [&](bool grad) {
        if (grad) p.grad = 2.0 * p.value * 1.5;
        return p.value.squaredNorm();
      },
      params, 1e-5);
  CHECK(broken >= 0.1);

  CHECK_THROWS_AS(nn::finite_difference_check([&](bool) { return std::nan(""); }, params, 1e-5), Error);
}
