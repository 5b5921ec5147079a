// Serial reference kernels vs the batched OpenMP/Eigen kernels.

#include "react/kernels.hpp"
#include "react/model.hpp"
#include "react/objective.hpp"

#include <benchmark/benchmark.h>

using namespace react;

namespace {

const Dims kDims{6, 8, 10, 2};

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Instance random_instance(Rng& rng) {
  Instance inst;
  inst.id = "b";
  inst.context = Vector(static_cast<Eigen::Index>(kDims.d_s));
  for (auto& v : inst.context) v = rng.normal();
  inst.temporal = Grid(static_cast<Eigen::Index>(kDims.T), static_cast<Eigen::Index>(kDims.d));
  for (Eigen::Index i = 0; i < inst.temporal.size(); ++i) inst.temporal.data()[i] = rng.normal();
  for (std::size_t t = 0; t < kDims.T; ++t) inst.labels.push_back(static_cast<int>(rng.below(kDims.C)));
  return inst;
}

CostSpec unit_costs() {
  return {Vector::Ones(static_cast<Eigen::Index>(kDims.d_s)), Vector::Ones(static_cast<Eigen::Index>(kDims.d))};
}

struct LossFixture {
  Models models = init_models(kDims, 1);
  std::vector<Instance> instances;
  std::vector<StateRef> states;
  std::vector<StateNoise> noise;
  CostSpec costs = unit_costs();
  LossOptions opts;

  explicit LossFixture(std::size_t n) {
    Rng rng(7);
    opts.lambda = 1e-3;
    for (std::size_t i = 0; i < n; ++i) instances.push_back(random_instance(rng));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = rng.below(kDims.T);
      MaskState s{BitGrid::Zero(static_cast<Eigen::Index>(kDims.T), static_cast<Eigen::Index>(kDims.d)), t};
      for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(t); ++r)
        for (Eigen::Index j = 0; j < s.prev.cols(); ++j) s.prev(r, j) = rng.coin();
      states.push_back({&instances[i], s});
      noise.push_back(draw_state_noise(kDims, rng));
    }
  }
};

void BM_affine_ref(benchmark::State& st) {
  Rng rng(1);
  const auto n = st.range(0);
  const Matrix W = random_matrix(512, 128, rng), b = random_matrix(512, 1, rng), X = random_matrix(128, n, rng);
  Matrix Y(512, n);
  for (auto _ : st) {
    for (Eigen::Index k = 0; k < n; ++k) kernels::ref::affine(W, b, X.col(k).data(), Y.col(k).data());
    benchmark::DoNotOptimize(Y.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

void BM_affine_par(benchmark::State& st) {
  Rng rng(1);
  const auto n = st.range(0);
  const Matrix W = random_matrix(512, 128, rng), b = random_matrix(512, 1, rng), X = random_matrix(128, n, rng);
  Matrix Y(512, n);
  for (auto _ : st) {
    kernels::par::affine(W, b, X, Y);
    benchmark::DoNotOptimize(Y.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

void BM_affine_backward_ref(benchmark::State& st) {
  Rng rng(2);
  const auto n = st.range(0);
  const Matrix W = random_matrix(512, 128, rng), X = random_matrix(128, n, rng), G = random_matrix(512, n, rng);
  Matrix dW = Matrix::Zero(512, 128), db = Matrix::Zero(512, 1), dX(128, n);
  for (auto _ : st) {
    for (Eigen::Index k = 0; k < n; ++k) kernels::ref::affine_backward(W, X.col(k).data(), G.col(k).data(), dW, db, dX.col(k).data());
    benchmark::DoNotOptimize(dW.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

void BM_affine_backward_par(benchmark::State& st) {
  Rng rng(2);
  const auto n = st.range(0);
  const Matrix W = random_matrix(512, 128, rng), X = random_matrix(128, n, rng), G = random_matrix(512, n, rng);
  Matrix dW = Matrix::Zero(512, 128), db = Matrix::Zero(512, 1), dX(128, n);
  for (auto _ : st) {
    kernels::par::affine_backward(W, X, G, dW, db, &dX);
    benchmark::DoNotOptimize(dW.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

void BM_react_loss_ref(benchmark::State& st) {
  LossFixture f(static_cast<std::size_t>(st.range(0)));
  const double w = 1.0 / static_cast<double>(f.states.size());
  for (auto _ : st) {
    f.models.zero_grad();
    double sum = 0.0;
    for (std::size_t k = 0; k < f.states.size(); ++k)
      sum += react_loss(f.models, *f.states[k].instance, f.states[k].state, f.costs, f.opts, f.noise[k], w).loss;
    benchmark::DoNotOptimize(sum);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_react_loss_batch(benchmark::State& st) {
  LossFixture f(static_cast<std::size_t>(st.range(0)));
  const double w = 1.0 / static_cast<double>(f.states.size());
  for (auto _ : st) {
    f.models.zero_grad();
    const auto bl = react_loss_batch(f.models, f.states, f.costs, f.opts, f.noise, w);
    benchmark::DoNotOptimize(bl.loss_sum);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_affine_ref)->Arg(32)->Arg(256);
BENCHMARK(BM_affine_par)->Arg(32)->Arg(256);
BENCHMARK(BM_affine_backward_ref)->Arg(32)->Arg(256);
BENCHMARK(BM_affine_backward_par)->Arg(32)->Arg(256);
BENCHMARK(BM_react_loss_ref)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_react_loss_batch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
