#include "react/training.hpp"

#include "react/errors.hpp"
#include "react/inference.hpp"
#include "react/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace react {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;     // "train"
constexpr std::uint64_t kPretrainStream = 0x707265ULL;      // "pre"
constexpr std::uint64_t kPretrainValStream = 0x7076616cULL;  // "pval"
constexpr std::uint64_t kReferenceStream = 0x726566ULL;     // "ref"

// One masked predictor example: instance, target step, masks.
struct MaskedExample {
  std::size_t instance = 0;
  std::size_t target = 0;  // 1..T
  BitVector context;
  BitGrid temporal;
};

MaskedExample draw_masked_example(std::size_t instance, std::size_t target, const Dims& dims, Rng& rng) {
  MaskedExample ex;
  ex.instance = instance;
  ex.target = target;
  ex.context = sample_subset_mask(dims.d_s, rng);
  ex.temporal = BitGrid::Zero(static_cast<Eigen::Index>(dims.T), static_cast<Eigen::Index>(dims.d));
  for (std::size_t t = 0; t < target; ++t) ex.temporal.row(static_cast<Eigen::Index>(t)) = sample_subset_mask(dims.d, rng).transpose();
  return ex;
}

struct BatchEval {
  double loss_sum = 0.0;
  std::size_t correct = 0;
};

// Forward (and optionally backward) over a list of masked examples.
BatchEval run_examples(Predictor& predictor, const std::vector<Instance>& data, std::span<const MaskedExample> examples,
                       bool train, double dropout_rate, Rng* rng) {
  const auto n = static_cast<Eigen::Index>(examples.size());
  Matrix in(static_cast<Eigen::Index>(predictor.input_dim()), n);
  std::vector<int> labels(examples.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& ex = examples[static_cast<std::size_t>(k)];
    const Instance& inst = data[ex.instance];
    predictor.write_input(apply_mask(inst.temporal, ex.temporal), apply_mask(inst.context, ex.context), ex.target,
                          in.col(k).data());
    labels[static_cast<std::size_t>(k)] = inst.labels[ex.target - 1];
  }
  nn::BatchTape tape;
  const Matrix logits = predictor.mlp().forward_batch(in, train ? &tape : nullptr, train ? dropout_rate : 0.0, rng);
  const std::vector<double> weights(examples.size(), 1.0 / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  Matrix grad;
  const Vector losses = nn::softmax_cross_entropy_batch(logits, labels, weights, grad);
  BatchEval out;
  out.loss_sum = losses.sum();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index arg = 0;
    logits.col(k).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(k)]) ++out.correct;
  }
  if (train) predictor.mlp().backward_batch(tape, grad, false);
  return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t size, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min(n, size);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

}  // namespace

BitVector sample_subset_mask(std::size_t n, Rng& rng) {
  BitVector mask = BitVector::Zero(static_cast<Eigen::Index>(n));
  const std::size_t k = static_cast<std::size_t>(rng.below(n + 1));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
    mask[static_cast<Eigen::Index>(idx[i])] = 1;
  }
  return mask;
}

PretrainReport pretrain_predictor(Predictor& predictor, const std::vector<Instance>& train,
                                  const std::vector<Instance>& val, const TrainConfig& cfg) {
  if (train.empty() || val.empty()) throw InputError("pretrain: train and validation sets must be nonempty");
  const Dims& dims = predictor.dims();
  Rng rng(Rng::combine(cfg.seed, kPretrainStream));
  Rng val_rng(Rng::combine(cfg.seed, kPretrainValStream));

  std::vector<MaskedExample> val_examples;
  for (std::size_t i = 0; i < val.size(); ++i)
    for (std::size_t t = 1; t <= dims.T; ++t) val_examples.push_back(draw_masked_example(i, t, dims, val_rng));

  AdamState adam;
  PretrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  nn::Mlp best = predictor.mlp();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size() * dims.T);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.max_pretrain_epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.pretrain_batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.pretrain_batch_size);
      std::vector<MaskedExample> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k)
        batch.push_back(draw_masked_example(order[k] / dims.T, order[k] % dims.T + 1, dims, rng));
      predictor.mlp().zero_grad();
      const BatchEval ev = run_examples(predictor, train, batch, true, cfg.dropout_rate, &rng);
      if (!std::isfinite(ev.loss_sum)) throw TrainingError("pretrain: non-finite loss");
      auto params = predictor.mlp().params();
      optimizer_step(params, cfg.lr_pretrain, adam);
    }
    const BatchEval ev = run_examples(predictor, val, val_examples, false, 0.0, nullptr);
    const double val_loss = ev.loss_sum / static_cast<double>(val_examples.size());
    report.val_losses.push_back(val_loss);
    report.epochs = epoch + 1;
    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_val_accuracy = static_cast<double>(ev.correct) / static_cast<double>(val_examples.size());
      best = predictor.mlp();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  predictor.mlp() = best;
  predictor.mlp().zero_grad();
  return report;
}

std::vector<Plan> sample_candidate_plans(std::size_t K, const Dims& dims, Rng& rng) {
  if (K == 0) throw InputError("candidate plans: K must be >= 1");
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  std::vector<Plan> plans;
  plans.reserve(K + 2);
  for (std::size_t k = 0; k < K; ++k) {
    Plan p{BitVector(ds), BitGrid(T, d)};
    for (Eigen::Index j = 0; j < ds; ++j) p.context[j] = rng.coin() ? 1 : 0;
    for (Eigen::Index i = 0; i < T * d; ++i) p.temporal.data()[i] = rng.coin() ? 1 : 0;
    plans.push_back(std::move(p));
  }
  plans.push_back({BitVector::Zero(ds), BitGrid::Zero(T, d)});
  plans.push_back({BitVector::Ones(ds), BitGrid::Ones(T, d)});
  return plans;
}

std::vector<Plan> enumerate_plans(const Dims& dims) {
  const std::size_t bits = dims.d_s + dims.grid_size();
  if (bits > 20) throw InputError("enumerate_plans: plan space too large");
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  std::vector<Plan> plans;
  plans.reserve(std::size_t{1} << bits);
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
    Plan p{BitVector(ds), BitGrid(T, d)};
    for (Eigen::Index j = 0; j < ds; ++j) p.context[j] = (code >> j) & 1U;
    for (Eigen::Index i = 0; i < T * d; ++i) p.temporal.data()[i] = (code >> (ds + i)) & 1U;
    plans.push_back(std::move(p));
  }
  return plans;
}

ReferencePlan select_reference_plan(std::size_t index, const Instance& inst, const Predictor& predictor, double lambda,
                                    const CostSpec& costs, std::span<const Plan> pool) {
  if (pool.empty()) throw InputError("reference plan: empty candidate pool");
  const std::vector<double> pred = plugin_prediction_losses(predictor, inst, pool);
  std::size_t best = 0;
  double best_score = 0.0, best_cost = 0.0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const double cost = total_cost(pool[k].context, pool[k].temporal, costs);
    const double score = pred[k] + lambda * cost;
    if (k == 0 || score < best_score || (score == best_score && cost < best_cost)) {
      best = k;
      best_score = score;
      best_cost = cost;
    }
  }
  return {index, inst.id, pool[best], best_score};
}

std::vector<ReferencePlan> build_reference_set(const std::vector<Instance>& train, const Predictor& predictor,
                                               double lambda, const CostSpec& costs, std::size_t K, Rng& rng) {
  std::vector<ReferencePlan> out;
  out.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::vector<Plan> pool = sample_candidate_plans(K, predictor.dims(), rng);
    out.push_back(select_reference_plan(i, train[i], predictor, lambda, costs, pool));
  }
  return out;
}

std::vector<ReferencePlan> build_reference_set(const std::vector<Instance>& train, const Predictor& predictor,
                                               double lambda, const CostSpec& costs, std::span<const Plan> pool) {
  std::vector<ReferencePlan> out;
  out.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    out.push_back(select_reference_plan(i, train[i], predictor, lambda, costs, pool));
  return out;
}

RolloutNoise draw_rollout_noise(const Dims& dims, Rng& rng) {
  RolloutNoise n{Vector(static_cast<Eigen::Index>(dims.d_s)),
                 Grid(static_cast<Eigen::Index>(dims.T), static_cast<Eigen::Index>(dims.d))};
  for (Eigen::Index j = 0; j < n.context.size(); ++j) n.context[j] = gating::draw_gumbel(rng);
  for (Eigen::Index i = 0; i < n.rows.size(); ++i) n.rows.data()[i] = gating::draw_gumbel(rng);
  return n;
}

namespace {

BitVector rollout_context(const Models& models, double tau, const Vector& noise, ContextMode mode) {
  const auto ds = static_cast<Eigen::Index>(models.dims.d_s);
  switch (mode) {
    case ContextMode::all: return BitVector::Ones(ds);
    case ContextMode::none: return BitVector::Zero(ds);
    case ContextMode::learned: break;
  }
  return gating::gate_vector(models.selector.alpha.value.col(0), noise, tau).mask;
}

}  // namespace

Rollout rollout_onpolicy(const Models& models, const Instance& inst, double tau, const RolloutNoise& noise,
                         ContextMode mode) {
  const Dims& dims = models.dims;
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  Rollout r;
  r.context_mask = rollout_context(models, tau, noise.context, mode);
  const Vector s_tilde = apply_mask(inst.context, r.context_mask);
  BitGrid prev = BitGrid::Zero(T, d);
  Grid history = Grid::Zero(T, d);
  r.states.push_back({prev, 0});
  for (Eigen::Index t = 1; t <= T; ++t) {
    const Grid logits = models.planner.logits(history, static_cast<std::size_t>(t), s_tilde);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto g = gating::st_gate(logits(t - 1, j), noise.rows(t - 1, j), tau);
      prev(t - 1, j) = g.value;
      history(t - 1, j) = g.value ? inst.temporal(t - 1, j) : 0.0;
    }
    r.states.push_back({prev, static_cast<std::size_t>(t)});
  }
  return r;
}

Rollout rollout_onpolicy(const Models& models, const Instance& inst, double tau, Rng& rng, ContextMode mode) {
  return rollout_onpolicy(models, inst, tau, draw_rollout_noise(models.dims, rng), mode);
}

std::vector<Rollout> rollout_onpolicy_batch(const Models& models, std::span<const Instance* const> instances,
                                            double tau, std::span<const RolloutNoise> noise, ContextMode mode) {
  if (noise.size() != instances.size()) throw InputError("rollout: one noise draw per instance required");
  const Dims& dims = models.dims;
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  const auto B = static_cast<Eigen::Index>(instances.size());
  std::vector<Rollout> out(instances.size());
  std::vector<Vector> s_tilde(instances.size());
  std::vector<Grid> history(instances.size(), Grid::Zero(T, d));
  for (std::size_t b = 0; b < instances.size(); ++b) {
    out[b].context_mask = rollout_context(models, tau, noise[b].context, mode);
    s_tilde[b] = apply_mask(instances[b]->context, out[b].context_mask);
    out[b].states.push_back({BitGrid::Zero(T, d), 0});
  }
  Matrix in(static_cast<Eigen::Index>(models.planner.input_dim()), B);
  for (Eigen::Index t = 1; t <= T; ++t) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < B; ++b)
      models.planner.write_input(history[static_cast<std::size_t>(b)], static_cast<std::size_t>(t),
                                 s_tilde[static_cast<std::size_t>(b)], in.col(b).data());
    const Matrix logits = models.planner.mlp().forward_batch(in);
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      BitGrid prev = out[ub].states.back().prev;
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto g = gating::st_gate(logits((t - 1) * d + j, b), noise[ub].rows(t - 1, j), tau);
        prev(t - 1, j) = g.value;
        history[ub](t - 1, j) = g.value ? instances[ub]->temporal(t - 1, j) : 0.0;
      }
      out[ub].states.push_back({std::move(prev), static_cast<std::size_t>(t)});
    }
  }
  return out;
}

std::vector<MaskState> reference_states(const Plan& plan) {
  std::vector<MaskState> states;
  const auto T = static_cast<std::size_t>(plan.temporal.rows());
  for (std::size_t t = 0; t <= T; ++t) states.push_back({keep_upto(plan.temporal, t), t});
  return states;
}

const char* to_string(Phase p) { return p == Phase::warmup ? "warmup" : "self"; }

IterationResult train_iteration(std::span<const std::size_t> batch, const std::vector<Instance>& train, Models& models,
                                const TrainConfig& cfg, const CostSpec& costs, Rng& rng, Phase phase,
                                const std::vector<ReferencePlan>* references, Optimizers& optimizers) {
  if (batch.empty()) throw InputError("train_iteration: empty batch");
  const Dims& dims = models.dims;

  // Step 1: collect observation states.
  std::vector<StateRef> states;
  states.reserve(batch.size() * (dims.T + 1));
  double rollout_cost = 0.0;
  if (phase == Phase::self) {
    std::vector<const Instance*> instances;
    std::vector<RolloutNoise> noise;
    for (std::size_t i : batch) {
      instances.push_back(&train.at(i));
      noise.push_back(draw_rollout_noise(dims, rng));
    }
    const std::vector<Rollout> rollouts = rollout_onpolicy_batch(models, instances, cfg.tau, noise, cfg.context_mode);
    for (std::size_t b = 0; b < rollouts.size(); ++b) {
      rollout_cost += total_cost(rollouts[b].context_mask, rollouts[b].states.back().prev, costs);
      for (const auto& s : rollouts[b].states) states.push_back({instances[b], s});
    }
  } else {
    if (references == nullptr) throw InputError("train_iteration: warmup phase needs reference plans");
    for (std::size_t i : batch) {
      const ReferencePlan& ref = references->at(i);
      rollout_cost += total_cost(ref.plan.context, ref.plan.temporal, costs);
      for (auto& s : reference_states(ref.plan)) states.push_back({&train.at(i), std::move(s)});
    }
  }
  rollout_cost /= static_cast<double>(batch.size());

  // Step 2: mean relaxed loss over all states.
  std::vector<StateNoise> noise;
  noise.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) noise.push_back(draw_state_noise(dims, rng));
  LossOptions opts;
  opts.lambda = cfg.lambda;
  opts.tau = cfg.tau;
  opts.context_mode = cfg.context_mode;
  const double weight = 1.0 / static_cast<double>(states.size());
  models.zero_grad();
  const BatchLoss bl = react_loss_batch(models, states, costs, opts, noise, weight);
  IterationResult res;
  res.states = states.size();
  res.loss = bl.loss_sum * weight;
  res.prediction_loss = bl.prediction_loss_sum * weight;
  res.mean_rollout_cost = rollout_cost;
  if (!std::isfinite(res.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss in " << to_string(phase) << " iteration (states=" << states.size()
        << ", prediction loss=" << res.prediction_loss << ")";
    throw TrainingError(msg.str());
  }

  // Step 3: gradient step.
  auto policy = models.policy_params();
  auto predictor = models.predictor_params();
  optimizer_step(policy, cfg.lr_policy, optimizers.policy);
  optimizer_step(predictor, cfg.lr_predictor_joint, optimizers.predictor);
  return res;
}

nlohmann::json log_record_to_json(const LogRecord& r) {
  nlohmann::json j{{"iteration", r.iteration}, {"phase", to_string(r.phase)}, {"loss", r.loss},
                   {"rollout_cost", r.rollout_cost}};
  j["val_auroc"] = r.val_auroc ? nlohmann::json(*r.val_auroc) : nlohmann::json(nullptr);
  return j;
}

TrainResult train(Models models, const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
                  const CostSpec& costs, const TrainConfig& cfg, const std::function<void(const LogRecord&)>& on_log) {
  cfg.validate();
  costs.validate(models.dims);
  models.tau = cfg.tau;
  TrainResult result;
  if (cfg.total_batches == 0) {
    result.models = std::move(models);
    return result;
  }
  if (train_set.empty()) throw InputError("train: empty training set");

  std::vector<ReferencePlan> references;
  if (cfg.warmup_batches > 0) {
    Rng ref_rng(Rng::combine(cfg.seed, kReferenceStream));
    references = build_reference_set(train_set, models.predictor, cfg.lambda, costs, cfg.K_candidates, ref_rng);
  }

  Rng rng(Rng::combine(cfg.seed, kTrainStream));
  Optimizers optimizers;
  for (std::size_t it = 0; it < cfg.total_batches; ++it) {
    const Phase phase = it < cfg.warmup_batches ? Phase::warmup : Phase::self;
    const std::vector<std::size_t> batch = sample_batch(train_set.size(), cfg.batch_size, rng);
    const IterationResult ir =
        train_iteration(batch, train_set, models, cfg, costs, rng, phase, &references, optimizers);
    const bool last = it + 1 == cfg.total_batches;
    LogRecord rec{it + 1, phase, ir.loss, ir.mean_rollout_cost, std::nullopt};
    if (cfg.log_interval > 0 && ((it + 1) % cfg.log_interval == 0 || last) && !val_set.empty()) {
      const auto inf = infer_dataset(models, val_set, costs);
      rec.val_auroc = pooled_metrics(inf.records, val_set).auroc;
    }
    result.log.push_back(rec);
    if (on_log) on_log(rec);
  }
  models.zero_grad();
  result.models = std::move(models);
  return result;
}

}  // namespace react
