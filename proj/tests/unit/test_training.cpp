#include "helpers.hpp"
#include "react/training.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace react;
using testing::tiny_arch;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.arch = tiny_arch();
  cfg.batch_size = 8;
  cfg.total_batches = 6;
  cfg.warmup_batches = 2;
  cfg.K_candidates = 10;
  cfg.lambda = 0.05;
  cfg.max_pretrain_epochs = 5;
  cfg.log_interval = 3;
  return cfg;
}

std::vector<Instance> random_set(const Dims& dims, std::size_t n, Rng& rng) {
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_instance(dims, rng, "r" + std::to_string(i)));
  return out;
}

bool same_params(Models& a, Models& b) {
  auto pa = a.policy_params(), pb = b.policy_params();
  auto qa = a.predictor_params(), qb = b.predictor_params();
  pa.insert(pa.end(), qa.begin(), qa.end());
  pb.insert(pb.end(), qb.begin(), qb.end());
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->value != pb[i]->value) return false;
  return true;
}

}  // namespace

TEST_CASE("adam: scalar quadratic converges") {
  nn::ParamTensor p(1, 1);
  p.value(0, 0) = 1.0;
  std::vector<nn::ParamTensor*> params{&p};
  AdamState st;
  for (int i = 0; i < 200; ++i) {
    p.grad(0, 0) = 2.0 * p.value(0, 0);
    optimizer_step(params, 0.1, st);
  }
  CHECK(std::abs(p.value(0, 0)) < 1e-3);
  CHECK(st.step == 200);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  nn::ParamTensor p(2, 2);
  p.value << 1, 2, 3, 4;
  const Matrix before = p.value;
  std::vector<nn::ParamTensor*> params{&p};
  AdamState st;
  optimizer_step(params, 0.1, st);
  CHECK(p.value == before);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step moves each coordinate by lr against the gradient sign") {
  nn::ParamTensor p(3, 1);
  p.grad << 0.5, -2.0, 1e-3;
  std::vector<nn::ParamTensor*> params{&p};
  AdamState st;
  optimizer_step(params, 0.01, st);
  CHECK(p.value(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p.value(1, 0) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(p.value(2, 0) == doctest::Approx(-0.01).epsilon(1e-4));
}

TEST_CASE("subset masks") {
  Rng rng(1);
  std::vector<int> sizes(6, 0);
  for (int i = 0; i < 6000; ++i) ++sizes[static_cast<std::size_t>(sample_subset_mask(5, rng).cast<int>().sum())];
  for (int c : sizes) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("candidate plans") {
  const Dims dims{2, 3, 4, 2};
  Rng a(5), b(5);
  const auto pa = sample_candidate_plans(1, dims, a);
  const auto pb = sample_candidate_plans(1, dims, b);
  REQUIRE(pa.size() == 3);
  CHECK(pa[0].temporal == pb[0].temporal);
  CHECK(pa[0].context == pb[0].context);
  CHECK(pa[1].temporal.isZero());
  CHECK(pa[1].context.isZero());
  CHECK((pa[2].temporal.array() == 1).all());
  CHECK((pa[2].context.array() == 1).all());

  Rng r(6);
  const auto many = sample_candidate_plans(10000, dims, r);
  double ones = 0.0, bits = 0.0;
  for (std::size_t k = 0; k < 10000; ++k) {
    ones += many[k].temporal.cast<double>().sum() + many[k].context.cast<double>().sum();
    bits += 14.0;
  }
  CHECK(std::abs(ones / bits - 0.5) < 0.01);
  CHECK(enumerate_plans({1, 1, 2, 2}).size() == 8);
}

TEST_CASE("reference plans match exhaustive search") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const Dims dims{1 + rng.below(2), 1 + rng.below(2), 1 + rng.below(2), 2};
    Models m = init_models(dims, 40 + static_cast<std::uint64_t>(trial), tiny_arch());
    const auto train = random_set(dims, 3, rng);
    const CostSpec costs = testing::random_costs(dims, rng);
    const auto pool = enumerate_plans(dims);
    for (double lambda : {0.0, 0.1, 10.0}) {
      const auto refs = build_reference_set(train, m.predictor, lambda, costs, pool);
      for (std::size_t i = 0; i < train.size(); ++i) {
        double best = std::numeric_limits<double>::infinity(), best_cost = 0.0;
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < pool.size(); ++k) {
          const double j = plugin_objective(pool[k], train[i], m.predictor, lambda, costs);
          const double c = total_cost(pool[k].context, pool[k].temporal, costs);
          if (j < best - 1e-12 || (std::abs(j - best) <= 1e-12 && c < best_cost)) {
            best = j;
            best_cost = c;
            best_k = k;
          }
        }
        CHECK(refs[i].score == doctest::Approx(best).epsilon(1e-10));
        CHECK(refs[i].plan.temporal == pool[best_k].temporal);
        CHECK(refs[i].plan.context == pool[best_k].context);
      }
    }
  }
}

TEST_CASE("reference plans: extreme lambda picks the empty plan") {
  const Dims dims{2, 2, 3, 2};
  Rng rng(8);
  Models m = init_models(dims, 9, tiny_arch());
  const auto train = random_set(dims, 4, rng);
  const auto refs = build_reference_set(train, m.predictor, 1e6, testing::unit_costs(dims), 20, rng);
  for (const auto& r : refs) {
    CHECK(r.plan.temporal.isZero());
    CHECK(r.plan.context.isZero());
  }
}

TEST_CASE("reference plans: larger lambda never raises the cost on the full enumeration") {
  const Dims dims{1, 2, 2, 2};
  Rng rng(9);
  Models m = init_models(dims, 10, tiny_arch());
  const auto train = random_set(dims, 5, rng);
  const CostSpec costs = testing::random_costs(dims, rng);
  const auto pool = enumerate_plans(dims);
  const auto lo = build_reference_set(train, m.predictor, 0.01, costs, pool);
  const auto hi = build_reference_set(train, m.predictor, 0.5, costs, pool);
  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK(total_cost(hi[i].plan.context, hi[i].plan.temporal, costs) <=
          total_cost(lo[i].plan.context, lo[i].plan.temporal, costs));
}

TEST_CASE("rollouts: state structure and logit extremes") {
  const Dims dims{2, 3, 4, 2};
  Rng rng(10);
  Models m = init_models(dims, 11, tiny_arch());
  const Instance inst = testing::random_instance(dims, rng);

  testing::force_planner_logits(m, -50.0);
  auto r = rollout_onpolicy(m, inst, 1.0, rng);
  REQUIRE(r.states.size() == 5);
  for (std::size_t t = 0; t <= 4; ++t) {
    CHECK(r.states[t].t == t);
    CHECK(r.states[t].prev.isZero());
  }

  testing::force_planner_logits(m, 50.0);
  r = rollout_onpolicy(m, inst, 1.0, rng);
  for (std::size_t t = 0; t <= 4; ++t) {
    r.states[t].validate(dims);
    CHECK(r.states[t].prev.topRows(static_cast<Eigen::Index>(t)).cast<int>().sum() == static_cast<int>(3 * t));
  }
}

TEST_CASE("rollouts: batched lockstep equals per-instance rollouts") {
  const Dims dims{2, 3, 5, 2};
  Rng rng(12);
  Models m = init_models(dims, 13, tiny_arch());
  m.selector.alpha.value << 0.3, -0.4;
  const auto set = random_set(dims, 6, rng);
  std::vector<const Instance*> ptrs;
  std::vector<RolloutNoise> noise;
  for (const auto& i : set) {
    ptrs.push_back(&i);
    noise.push_back(draw_rollout_noise(dims, rng));
  }
  const auto batched = rollout_onpolicy_batch(m, ptrs, 1.0, noise);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto single = rollout_onpolicy(m, set[i], 1.0, noise[i]);
    CHECK(single.context_mask == batched[i].context_mask);
    for (std::size_t t = 0; t < single.states.size(); ++t) CHECK(single.states[t].prev == batched[i].states[t].prev);
  }
}

TEST_CASE("reference states truncate the plan") {
  Plan p{BitVector::Ones(1), BitGrid::Zero(3, 2)};
  p.temporal << 1, 0, 0, 1, 1, 1;
  const auto states = reference_states(p);
  REQUIRE(states.size() == 4);
  CHECK(states[0].prev.isZero());
  CHECK(states[2].prev == keep_upto(p.temporal, 2));
  CHECK(states[3].prev == p.temporal);
}

TEST_CASE("train_iteration is deterministic and reports the mean state loss") {
  const Dims dims{2, 2, 3, 2};
  Rng rng(14);
  const auto train = random_set(dims, 10, rng);
  const TrainConfig cfg = tiny_config();
  const CostSpec costs = testing::unit_costs(dims);
  Models a = init_models(dims, 15, cfg.arch), b = init_models(dims, 15, cfg.arch);
  Optimizers oa, ob;
  const std::vector<std::size_t> batch{0, 3, 5, 7};
  Rng ra(99), rb(99);
  const auto ia = train_iteration(batch, train, a, cfg, costs, ra, Phase::self, nullptr, oa);
  const auto ib = train_iteration(batch, train, b, cfg, costs, rb, Phase::self, nullptr, ob);
  CHECK(ia.loss == ib.loss);
  CHECK(ia.states == batch.size() * (dims.T + 1));
  CHECK(same_params(a, b));

  // Recompute the mean loss with the same draws.
  Models c = init_models(dims, 15, cfg.arch);
  Rng rc(99);
  std::vector<const Instance*> ptrs;
  std::vector<RolloutNoise> rn;
  for (auto i : batch) {
    ptrs.push_back(&train[i]);
    rn.push_back(draw_rollout_noise(dims, rc));
  }
  const auto rollouts = rollout_onpolicy_batch(c, ptrs, cfg.tau, rn);
  double sum = 0.0;
  std::size_t n = 0;
  LossOptions opts;
  opts.lambda = cfg.lambda;
  for (std::size_t b2 = 0; b2 < rollouts.size(); ++b2)
    for (const auto& s : rollouts[b2].states) {
      const StateNoise noise = draw_state_noise(dims, rc);
      sum += react_loss(c, *ptrs[b2], s, costs, opts, noise).loss;
      ++n;
    }
  CHECK(ia.loss == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("warmup on a separable task lowers the prediction loss") {
  const Dims dims{1, 1, 3, 2};
  Rng rng(16);
  std::vector<Instance> train;
  for (int i = 0; i < 40; ++i) {
    Instance inst = testing::random_instance(dims, rng, "s" + std::to_string(i));
    for (std::size_t t = 0; t < 3; ++t) inst.labels[t] = inst.temporal(static_cast<Eigen::Index>(t), 0) > 0.0 ? 1 : 0;
    train.push_back(inst);
  }
  TrainConfig cfg = tiny_config();
  cfg.lambda = 0.0;
  cfg.lr_predictor_joint = 1e-2;
  cfg.lr_policy = 1e-2;
  Models m = init_models(dims, 17, cfg.arch);
  const CostSpec costs = testing::unit_costs(dims);
  Plan all{BitVector::Ones(1), BitGrid::Ones(3, 1)};
  std::vector<ReferencePlan> refs;
  for (std::size_t i = 0; i < train.size(); ++i) refs.push_back({i, train[i].id, all, 0.0});
  Optimizers opt;
  std::vector<std::size_t> batch(train.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 50; ++it) {
    const auto r = train_iteration(batch, train, m, cfg, costs, rng, Phase::warmup, &refs, opt);
    if (it == 0) first = r.prediction_loss;
    last = r.prediction_loss;
  }
  CHECK(last < 0.7 * first);
}

TEST_CASE("pretraining on a constant label reaches perfect accuracy") {
  const Dims dims{2, 2, 3, 2};
  Rng rng(18);
  auto train = random_set(dims, 30, rng);
  auto val = random_set(dims, 10, rng);
  for (auto* set : {&train, &val})
    for (auto& i : *set) std::fill(i.labels.begin(), i.labels.end(), 1);
  TrainConfig cfg = tiny_config();
  cfg.max_pretrain_epochs = 100;
  cfg.lr_pretrain = 1e-2;
  Models m = init_models(dims, 19, cfg.arch);
  const auto rep = pretrain_predictor(m.predictor, train, val, cfg);
  CHECK(rep.best_val_accuracy == 1.0);
  CHECK(rep.best_val_loss < 0.05);
  CHECK_THROWS_AS(pretrain_predictor(m.predictor, {}, val, cfg), InputError);
}

TEST_CASE("train: zero batches returns the input models") {
  const Dims dims{2, 2, 3, 2};
  Rng rng(20);
  const auto set = random_set(dims, 5, rng);
  TrainConfig cfg = tiny_config();
  cfg.total_batches = 0;
  cfg.warmup_batches = 0;
  Models m = init_models(dims, 21, cfg.arch);
  Models copy = m;
  auto res = train(m, set, set, testing::unit_costs(dims), cfg);
  CHECK(res.log.empty());
  CHECK(same_params(res.models, copy));
}

TEST_CASE("train: reproducible, phases in order, validation logged") {
  const Dims dims{2, 2, 3, 2};
  Rng rng(22);
  const auto set = random_set(dims, 12, rng);
  const TrainConfig cfg = tiny_config();
  Models m = init_models(dims, 23, cfg.arch);
  auto a = train(m, set, set, testing::unit_costs(dims), cfg);
  auto b = train(m, set, set, testing::unit_costs(dims), cfg);
  CHECK(same_params(a.models, b.models));
  REQUIRE(a.log.size() == 6);
  CHECK(a.log[0].phase == Phase::warmup);
  CHECK(a.log[1].phase == Phase::warmup);
  CHECK(a.log[2].phase == Phase::self);
  CHECK(a.log[2].val_auroc.has_value());
  CHECK(!a.log[3].val_auroc.has_value());
  CHECK(a.log[5].val_auroc.has_value());
}
