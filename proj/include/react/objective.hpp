#pragma once

#include "react/costs.hpp"
#include "react/data.hpp"
#include "react/errors.hpp"
#include "react/gating.hpp"
#include "react/model.hpp"
#include "react/types.hpp"

#include <span>
#include <vector>

namespace react {

// Binary context mask plus a T x d feature-by-time mask.
struct Plan {
  BitVector context;
  BitGrid temporal;
};

// Observation state at decision time t: rows for times t+1..T are zero.
struct MaskState {
  BitGrid prev;
  std::size_t t = 0;

  void validate(const Dims& dims) const;
};

// c_s . m_s + sum_t c_x . m_t
double total_cost(const BitVector& context_mask, const BitGrid& temporal_masks, const CostSpec& costs);
double context_cost(const BitVector& context_mask, const CostSpec& costs);
double temporal_cost(const BitGrid& temporal_masks, const CostSpec& costs);

// Time t (1-based) lives in row t-1. These operate on any row-major grid.

// Zero-pads a t x d grid to T rows.
template <typename G>
G pad_to_T(const G& v, std::size_t T);
// Zeroes the rows for times 1..t.
template <typename G>
G keep_after(const G& v, std::size_t t);
// Zeroes the rows for times t+1..T.
template <typename G>
G keep_upto(const G& v, std::size_t t);

enum class ContextMode { learned, all, none };

// Forward value of each gate: the hard straight-through value used in
// training, or the continuous proxy (used only to check gradients of the
// relaxed path against finite differences).
enum class GateForward { hard, relaxed };

struct LossOptions {
  double lambda = 0.0;
  double tau = 1.0;
  GateForward forward = GateForward::hard;
  ContextMode context_mode = ContextMode::learned;
};

// Gumbel noise for one loss evaluation; zeros give deterministic gating.
struct StateNoise {
  Vector context;  // d_s
  Grid plan;       // T x d
};

StateNoise zero_noise(const Dims& dims);
StateNoise draw_state_noise(const Dims& dims, Rng& rng);

struct StateLoss {
  double loss = 0.0;
  double prediction_loss = 0.0;
  double plan_cost = 0.0;     // temporal cost of P_{>t} (unweighted by lambda)
  double context_cost = 0.0;  // c_s . m_s (unweighted)
  Grid plan_logit_grad;       // grad_weight * dLoss/d planner logits
  Vector context_logit_grad;  // grad_weight * dLoss/d alpha
};

// Relaxed loss for planning after state.t, reference single-state path.
// Gradients, multiplied by grad_weight, are accumulated into the models.
StateLoss react_loss(Models& models, const Instance& inst, const MaskState& state, const CostSpec& costs,
                     const LossOptions& opts, const StateNoise& noise, double grad_weight = 1.0);

// Convenience overload drawing fresh noise (stochastic) from rng.
StateLoss react_loss(Models& models, const Instance& inst, const MaskState& state, const CostSpec& costs,
                     const LossOptions& opts, Rng& rng, double grad_weight = 1.0);

struct StateRef {
  const Instance* instance = nullptr;
  MaskState state;
};

struct BatchLoss {
  double loss_sum = 0.0;
  double prediction_loss_sum = 0.0;
  std::vector<double> state_losses;
};

// Batched equivalent of react_loss over many states. GEMMs run on the
// batched kernels, per-state work is OpenMP-parallel, and reductions happen
// in a fixed order so results do not depend on thread count.
BatchLoss react_loss_batch(Models& models, std::span<const StateRef> states, const CostSpec& costs,
                           const LossOptions& opts, std::span<const StateNoise> noise, double grad_weight);

// Plug-in objective J_lambda for a discrete plan on a fully observed instance.
double plugin_objective(const Plan& plan, const Instance& inst, const Predictor& predictor, double lambda,
                        const CostSpec& costs);

// Prediction-loss part of J_lambda for many candidate plans, batched.
std::vector<double> plugin_prediction_losses(const Predictor& predictor, const Instance& inst,
                                             std::span<const Plan> plans);

// ---- template definitions ----

template <typename G>
G pad_to_T(const G& v, std::size_t T) {
  if (static_cast<std::size_t>(v.rows()) > T) throw InputError("pad_to_T: more rows than T");
  G out = G::Zero(static_cast<Eigen::Index>(T), v.cols());
  out.topRows(v.rows()) = v;
  return out;
}

template <typename G>
G keep_after(const G& v, std::size_t t) {
  if (t > static_cast<std::size_t>(v.rows())) throw InputError("keep_after: t out of range");
  G out = v;
  out.topRows(static_cast<Eigen::Index>(t)).setZero();
  return out;
}

template <typename G>
G keep_upto(const G& v, std::size_t t) {
  if (t > static_cast<std::size_t>(v.rows())) throw InputError("keep_upto: t out of range");
  G out = v;
  out.bottomRows(v.rows() - static_cast<Eigen::Index>(t)).setZero();
  return out;
}

}  // namespace react
