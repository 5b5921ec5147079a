#include "react/objective.hpp"

#include "react/errors.hpp"

#include <cmath>
#include <numeric>

namespace react {

void MaskState::validate(const Dims& dims) const {
  if (static_cast<std::size_t>(prev.rows()) != dims.T || static_cast<std::size_t>(prev.cols()) != dims.d)
    throw InputError("mask state: grid shape mismatch");
  if (t > dims.T) throw InputError("mask state: t out of range");
  for (Eigen::Index r = static_cast<Eigen::Index>(t); r < prev.rows(); ++r)
    for (Eigen::Index j = 0; j < prev.cols(); ++j)
      if (prev(r, j) != 0) throw InputError("mask state: rows after t must be zero");
  if ((prev.array() > 1).any()) throw InputError("mask state: entries must be bits");
}

double context_cost(const BitVector& context_mask, const CostSpec& costs) {
  if (context_mask.size() != costs.context.size()) throw InputError("total_cost: context mask length mismatch");
  return costs.context.dot(context_mask.cast<double>());
}

double temporal_cost(const BitGrid& temporal_masks, const CostSpec& costs) {
  if (temporal_masks.cols() != costs.temporal.size()) throw InputError("total_cost: temporal mask width mismatch");
  double total = 0.0;
  for (Eigen::Index t = 0; t < temporal_masks.rows(); ++t)
    total += temporal_masks.row(t).cast<double>().dot(costs.temporal.transpose());
  return total;
}

double total_cost(const BitVector& context_mask, const BitGrid& temporal_masks, const CostSpec& costs) {
  return context_cost(context_mask, costs) + temporal_cost(temporal_masks, costs);
}

StateNoise zero_noise(const Dims& dims) {
  return {Vector::Zero(static_cast<Eigen::Index>(dims.d_s)),
          Grid::Zero(static_cast<Eigen::Index>(dims.T), static_cast<Eigen::Index>(dims.d))};
}

StateNoise draw_state_noise(const Dims& dims, Rng& rng) {
  StateNoise n = zero_noise(dims);
  for (Eigen::Index j = 0; j < n.context.size(); ++j) n.context[j] = gating::draw_gumbel(rng);
  for (Eigen::Index i = 0; i < n.plan.size(); ++i) n.plan.data()[i] = gating::draw_gumbel(rng);
  return n;
}

namespace {

struct ContextForward {
  Vector value;  // forward value of each context gate
  Vector dgate;  // d value / d alpha (zero when alpha is bypassed)
};

ContextForward context_forward(const Models& models, const LossOptions& opts, const Vector& noise) {
  const auto ds = static_cast<Eigen::Index>(models.dims.d_s);
  ContextForward cf{Vector::Zero(ds), Vector::Zero(ds)};
  switch (opts.context_mode) {
    case ContextMode::all:
      cf.value.setOnes();
      break;
    case ContextMode::none:
      break;
    case ContextMode::learned:
      for (Eigen::Index j = 0; j < ds; ++j) {
        const auto g = gating::st_gate(models.selector.alpha.value(j, 0), noise[j], opts.tau);
        cf.value[j] = opts.forward == GateForward::hard ? g.value : g.relaxed;
        cf.dgate[j] = g.grad;
      }
      break;
  }
  return cf;
}

void check_loss_inputs(const Models& models, const Instance& inst, const MaskState& state, const CostSpec& costs,
                       const LossOptions& opts) {
  const Dims& dims = models.dims;
  state.validate(dims);
  costs.validate(dims);
  if (!(opts.lambda >= 0.0)) throw InputError("react_loss: lambda must be nonnegative");
  if (!(opts.tau > 0.0)) throw ConfigError("react_loss: temperature must be positive");
  if (static_cast<std::size_t>(inst.temporal.rows()) != dims.T ||
      static_cast<std::size_t>(inst.temporal.cols()) != dims.d ||
      static_cast<std::size_t>(inst.context.size()) != dims.d_s || inst.labels.size() != dims.T)
    throw InputError("react_loss: instance shape mismatch");
}

}  // namespace

StateLoss react_loss(Models& models, const Instance& inst, const MaskState& state, const CostSpec& costs,
                     const LossOptions& opts, const StateNoise& noise, double w) {
  check_loss_inputs(models, inst, state, costs, opts);
  const Dims& dims = models.dims;
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto t = static_cast<Eigen::Index>(state.t);
  const double lambda = opts.lambda;

  const ContextForward cf = context_forward(models, opts, noise.context);
  const Vector s_tilde = cf.value.cwiseProduct(inst.context);

  const Grid prev = state.prev.cast<double>();
  Grid plan = Grid::Zero(T, d);
  Grid plan_dgate = Grid::Zero(T, d);
  nn::MlpTape planner_tape;
  if (t < T) {
    const Vector in = models.planner.make_input(prev.cwiseProduct(inst.temporal), state.t, s_tilde);
    const Vector logits =
        models.planner.mlp().forward(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())), &planner_tape);
    for (Eigen::Index r = t; r < T; ++r)
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto g = gating::st_gate(logits[r * d + j], noise.plan(r, j), opts.tau);
        plan(r, j) = opts.forward == GateForward::hard ? g.value : g.relaxed;
        plan_dgate(r, j) = g.grad;
      }
  }

  StateLoss out;
  Grid d_plan = Grid::Zero(T, d);
  Vector d_stilde = Vector::Zero(ds);
  const std::size_t grid = dims.grid_size();
  for (Eigen::Index tp = t + 1; tp <= T; ++tp) {
    const Grid available = prev + keep_upto(plan, static_cast<std::size_t>(tp));
    const Vector in =
        models.predictor.make_input(available.cwiseProduct(inst.temporal), s_tilde, static_cast<std::size_t>(tp));
    nn::MlpTape tape;
    const Vector logits =
        models.predictor.mlp().forward(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())), &tape);
    const auto ce = nn::softmax_cross_entropy(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())),
                                              inst.labels[static_cast<std::size_t>(tp - 1)]);
    out.prediction_loss += ce.loss;
    const Vector upstream = w * ce.grad_logits;
    const Vector din = models.predictor.mlp().backward(
        tape, std::span<const double>(upstream.data(), static_cast<std::size_t>(upstream.size())));
    for (Eigen::Index r = t; r < tp; ++r)
      for (Eigen::Index j = 0; j < d; ++j) d_plan(r, j) += din[r * d + j] * inst.temporal(r, j);
    d_stilde += din.segment(static_cast<Eigen::Index>(grid), ds);
  }

  for (Eigen::Index r = t; r < T; ++r)
    for (Eigen::Index j = 0; j < d; ++j) {
      out.plan_cost += plan(r, j) * costs.temporal[j];
      d_plan(r, j) += w * lambda * costs.temporal[j];
    }
  out.context_cost = cf.value.dot(costs.context);
  out.loss = out.prediction_loss + lambda * out.plan_cost + lambda * out.context_cost;

  out.plan_logit_grad = d_plan.cwiseProduct(plan_dgate);
  if (t < T) {
    const Vector din = models.planner.mlp().backward(
        planner_tape, std::span<const double>(out.plan_logit_grad.data(), grid));
    d_stilde += din.segment(static_cast<Eigen::Index>(grid + models.planner.time_embedding_dim()), ds);
  }
  const Vector d_context = w * lambda * costs.context + d_stilde.cwiseProduct(inst.context);
  out.context_logit_grad = d_context.cwiseProduct(cf.dgate);
  models.selector.alpha.grad.col(0) += out.context_logit_grad;
  return out;
}

StateLoss react_loss(Models& models, const Instance& inst, const MaskState& state, const CostSpec& costs,
                     const LossOptions& opts, Rng& rng, double grad_weight) {
  const StateNoise noise = draw_state_noise(models.dims, rng);
  return react_loss(models, inst, state, costs, opts, noise, grad_weight);
}

BatchLoss react_loss_batch(Models& models, std::span<const StateRef> states, const CostSpec& costs,
                           const LossOptions& opts, std::span<const StateNoise> noise, double w) {
  if (noise.size() != states.size()) throw InputError("react_loss_batch: one noise draw per state required");
  for (const auto& s : states) check_loss_inputs(models, *s.instance, s.state, costs, opts);
  const Dims& dims = models.dims;
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto grid = static_cast<Eigen::Index>(dims.grid_size());
  const auto B = static_cast<Eigen::Index>(states.size());
  const double lambda = opts.lambda;

  BatchLoss result;
  result.state_losses.assign(states.size(), 0.0);
  if (B == 0) return result;

  // Context gates per state.
  std::vector<ContextForward> ctx(states.size());
  Matrix s_tilde(ds, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    ctx[static_cast<std::size_t>(b)] = context_forward(models, opts, noise[static_cast<std::size_t>(b)].context);
    s_tilde.col(b) = ctx[static_cast<std::size_t>(b)].value.cwiseProduct(states[static_cast<std::size_t>(b)].instance->context);
  }

  // Planner forward over states that still have a future.
  std::vector<Eigen::Index> active;
  for (Eigen::Index b = 0; b < B; ++b)
    if (static_cast<Eigen::Index>(states[static_cast<std::size_t>(b)].state.t) < T) active.push_back(b);
  const auto A = static_cast<Eigen::Index>(active.size());
  Matrix planner_in(static_cast<Eigen::Index>(models.planner.input_dim()), A);
#pragma omp parallel for schedule(static)
  for (Eigen::Index a = 0; a < A; ++a) {
    const auto& s = states[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])];
    const Grid hist = s.state.prev.cast<double>().cwiseProduct(s.instance->temporal);
    models.planner.write_input(hist, s.state.t, s_tilde.col(active[static_cast<std::size_t>(a)]), planner_in.col(a).data());
  }
  nn::BatchTape planner_tape;
  const Matrix logits = A > 0 ? models.planner.mlp().forward_batch(planner_in, &planner_tape) : Matrix(grid, 0);

  // Gate the future rows. Columns hold row-major flattened T x d grids.
  Matrix plan = Matrix::Zero(grid, B);
  Matrix plan_dgate = Matrix::Zero(grid, B);
#pragma omp parallel for schedule(static)
  for (Eigen::Index a = 0; a < A; ++a) {
    const Eigen::Index b = active[static_cast<std::size_t>(a)];
    const auto& s = states[static_cast<std::size_t>(b)];
    const auto& nz = noise[static_cast<std::size_t>(b)].plan;
    for (Eigen::Index k = static_cast<Eigen::Index>(s.state.t) * d; k < grid; ++k) {
      const auto g = gating::st_gate(logits(k, a), nz.data()[k], opts.tau);
      plan(k, b) = opts.forward == GateForward::hard ? g.value : g.relaxed;
      plan_dgate(k, b) = g.grad;
    }
  }

  // One predictor column per (state, t') with t' in t+1..T.
  std::vector<Eigen::Index> col_start(states.size() + 1, 0);
  for (std::size_t b = 0; b < states.size(); ++b)
    col_start[b + 1] = col_start[b] + (T - static_cast<Eigen::Index>(states[b].state.t));
  const Eigen::Index N = col_start.back();
  const auto pin = static_cast<Eigen::Index>(models.predictor.input_dim());
  Matrix pred_in(pin, N);
  std::vector<int> labels(static_cast<std::size_t>(N));
  const std::vector<double> weights(static_cast<std::size_t>(N), w);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& s = states[static_cast<std::size_t>(b)];
    const Instance& inst = *s.instance;
    const auto t = static_cast<Eigen::Index>(s.state.t);
    const Grid prev = s.state.prev.cast<double>();
    const Eigen::Map<const Grid> p(plan.col(b).data(), T, d);
    for (Eigen::Index tp = t + 1; tp <= T; ++tp) {
      const Eigen::Index c = col_start[static_cast<std::size_t>(b)] + (tp - t - 1);
      const Grid available = prev + keep_upto(Grid(p), static_cast<std::size_t>(tp));
      models.predictor.write_input(available.cwiseProduct(inst.temporal), s_tilde.col(b), static_cast<std::size_t>(tp),
                                   pred_in.col(c).data());
      labels[static_cast<std::size_t>(c)] = inst.labels[static_cast<std::size_t>(tp - 1)];
    }
  }

  Matrix d_plan = Matrix::Zero(grid, B);
  Matrix d_stilde = Matrix::Zero(ds, B);
  Vector col_losses;
  if (N > 0) {
    nn::BatchTape tape;
    const Matrix pred_logits = models.predictor.mlp().forward_batch(pred_in, &tape);
    Matrix grad;
    col_losses = nn::softmax_cross_entropy_batch(pred_logits, labels, weights, grad);
    const Matrix din = models.predictor.mlp().backward_batch(tape, grad, true);
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& s = states[static_cast<std::size_t>(b)];
      const Instance& inst = *s.instance;
      const auto t = static_cast<Eigen::Index>(s.state.t);
      for (Eigen::Index tp = t + 1; tp <= T; ++tp) {
        const Eigen::Index c = col_start[static_cast<std::size_t>(b)] + (tp - t - 1);
        for (Eigen::Index r = t; r < tp; ++r)
          for (Eigen::Index j = 0; j < d; ++j) d_plan(r * d + j, b) += din(r * d + j, c) * inst.temporal(r, j);
        d_stilde.col(b) += din.col(c).segment(grid, ds);
      }
    }
  }

  // Cost terms, per-state losses.
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& s = states[static_cast<std::size_t>(b)];
    const auto t = static_cast<Eigen::Index>(s.state.t);
    double pred = 0.0;
    for (Eigen::Index c = col_start[static_cast<std::size_t>(b)]; c < col_start[static_cast<std::size_t>(b) + 1]; ++c)
      pred += col_losses[c];
    double plan_cost = 0.0;
    for (Eigen::Index r = t; r < T; ++r)
      for (Eigen::Index j = 0; j < d; ++j) {
        plan_cost += plan(r * d + j, b) * costs.temporal[j];
        d_plan(r * d + j, b) += w * lambda * costs.temporal[j];
      }
    const double ctx_cost = ctx[static_cast<std::size_t>(b)].value.dot(costs.context);
    const double loss = pred + lambda * plan_cost + lambda * ctx_cost;
    result.state_losses[static_cast<std::size_t>(b)] = loss;
    result.loss_sum += loss;
    result.prediction_loss_sum += pred;
  }

  // Planner backward through the straight-through gates.
  if (A > 0) {
    Matrix d_logits(grid, A);
    for (Eigen::Index a = 0; a < A; ++a) {
      const Eigen::Index b = active[static_cast<std::size_t>(a)];
      d_logits.col(a) = d_plan.col(b).cwiseProduct(plan_dgate.col(b));
    }
    const Matrix din = models.planner.mlp().backward_batch(planner_tape, d_logits, true);
    const auto offset = grid + static_cast<Eigen::Index>(models.planner.time_embedding_dim());
    for (Eigen::Index a = 0; a < A; ++a) d_stilde.col(active[static_cast<std::size_t>(a)]) += din.col(a).segment(offset, ds);
  }

  // Context selector, reduced in state order.
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& cf = ctx[static_cast<std::size_t>(b)];
    const Vector d_context =
        w * lambda * costs.context + d_stilde.col(b).cwiseProduct(states[static_cast<std::size_t>(b)].instance->context);
    models.selector.alpha.grad.col(0) += d_context.cwiseProduct(cf.dgate);
  }
  return result;
}

double plugin_objective(const Plan& plan, const Instance& inst, const Predictor& predictor, double lambda,
                        const CostSpec& costs) {
  const Dims& dims = predictor.dims();
  const Vector s_tilde = apply_mask(inst.context, plan.context);
  const Grid masked = apply_mask(inst.temporal, plan.temporal);
  double total = 0.0;
  for (std::size_t t = 1; t <= dims.T; ++t) {
    const Vector z = predictor.logits(keep_upto(masked, t), s_tilde, t);
    total += nn::softmax_cross_entropy(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                                       inst.labels[t - 1])
                 .loss;
  }
  return total + lambda * total_cost(plan.context, plan.temporal, costs);
}

std::vector<double> plugin_prediction_losses(const Predictor& predictor, const Instance& inst,
                                             std::span<const Plan> plans) {
  const Dims& dims = predictor.dims();
  const auto T = static_cast<Eigen::Index>(dims.T);
  std::vector<double> out(plans.size(), 0.0);
  constexpr std::size_t kChunk = 256;
  std::vector<int> labels;
  for (std::size_t start = 0; start < plans.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, plans.size() - start);
    const auto N = static_cast<Eigen::Index>(count) * T;
    Matrix in(static_cast<Eigen::Index>(predictor.input_dim()), N);
    labels.assign(static_cast<std::size_t>(N), 0);
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(count); ++k) {
      const Plan& plan = plans[start + static_cast<std::size_t>(k)];
      const Vector s_tilde = apply_mask(inst.context, plan.context);
      const Grid masked = apply_mask(inst.temporal, plan.temporal);
      for (Eigen::Index t = 1; t <= T; ++t) {
        const Eigen::Index c = k * T + (t - 1);
        predictor.write_input(keep_upto(masked, static_cast<std::size_t>(t)), s_tilde, static_cast<std::size_t>(t),
                              in.col(c).data());
        labels[static_cast<std::size_t>(c)] = inst.labels[static_cast<std::size_t>(t - 1)];
      }
    }
    const Matrix logits = predictor.mlp().forward_batch(in);
    Matrix grad;
    const std::vector<double> ones(static_cast<std::size_t>(N), 1.0);
    const Vector losses = nn::softmax_cross_entropy_batch(logits, labels, ones, grad);
    for (std::size_t k = 0; k < count; ++k)
      for (Eigen::Index t = 0; t < T; ++t) out[start + k] += losses[static_cast<Eigen::Index>(k) * T + t];
  }
  return out;
}

}  // namespace react
