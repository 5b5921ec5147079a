#pragma once

#include "react/config.hpp"
#include "react/data.hpp"
#include "react/model.hpp"
#include "react/objective.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace react {

// ---- optimizer ----

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m, v;
  std::size_t step = 0;
};

// One bias-corrected Adam update of every tensor from its .grad.
void optimizer_step(std::span<nn::ParamTensor* const> params, double lr, AdamState& state,
                    const AdamOptions& opts = {});

// ---- predictor pretraining ----

// Subset size uniform on {0..n}, then a uniform subset of that size.
BitVector sample_subset_mask(std::size_t n, Rng& rng);

struct PretrainReport {
  std::size_t epochs = 0;
  double best_val_loss = 0.0;
  double best_val_accuracy = 0.0;
  std::vector<double> val_losses;
};

// Cross-entropy on randomly masked inputs with dropout and early stopping on
// validation loss. Leaves the best-on-validation parameters in `predictor`.
PretrainReport pretrain_predictor(Predictor& predictor, const std::vector<Instance>& train,
                                  const std::vector<Instance>& val, const TrainConfig& cfg);

// ---- offline reference plans ----

// K fair-coin plans followed by the all-zero and all-one plans.
std::vector<Plan> sample_candidate_plans(std::size_t K, const Dims& dims, Rng& rng);
// Every plan over d_s + T*d bits (small problems only).
std::vector<Plan> enumerate_plans(const Dims& dims);

struct ReferencePlan {
  std::size_t instance = 0;  // index into the training set
  std::string id;
  Plan plan;
  double score = 0.0;  // J_lambda of `plan`
};

// argmin of J_lambda over `pool`; ties go to lower total cost, then lower index.
ReferencePlan select_reference_plan(std::size_t index, const Instance& inst, const Predictor& predictor, double lambda,
                                    const CostSpec& costs, std::span<const Plan> pool);

// Per-instance candidate pools of size K+2 drawn from rng.
std::vector<ReferencePlan> build_reference_set(const std::vector<Instance>& train, const Predictor& predictor,
                                               double lambda, const CostSpec& costs, std::size_t K, Rng& rng);
// Same pool for every instance.
std::vector<ReferencePlan> build_reference_set(const std::vector<Instance>& train, const Predictor& predictor,
                                               double lambda, const CostSpec& costs, std::span<const Plan> pool);

// ---- on-policy rollouts ----

struct RolloutNoise {
  Vector context;  // d_s
  Grid rows;       // T x d; row t-1 gates the query at step t
};

RolloutNoise draw_rollout_noise(const Dims& dims, Rng& rng);

struct Rollout {
  BitVector context_mask;
  std::vector<MaskState> states;  // t = 0..T
};

Rollout rollout_onpolicy(const Models& models, const Instance& inst, double tau, const RolloutNoise& noise,
                         ContextMode mode = ContextMode::learned);
Rollout rollout_onpolicy(const Models& models, const Instance& inst, double tau, Rng& rng,
                         ContextMode mode = ContextMode::learned);
// Lockstep batched rollouts; same result as calling rollout_onpolicy per instance.
std::vector<Rollout> rollout_onpolicy_batch(const Models& models, std::span<const Instance* const> instances,
                                            double tau, std::span<const RolloutNoise> noise,
                                            ContextMode mode = ContextMode::learned);

// States induced by a reference plan: K_{<=t}(M*) for t = 0..T.
std::vector<MaskState> reference_states(const Plan& plan);

// ---- joint training ----

enum class Phase { warmup, self };
const char* to_string(Phase p);

struct Optimizers {
  AdamState policy;
  AdamState predictor;
};

struct IterationResult {
  double loss = 0.0;  // mean react_loss over collected states
  double prediction_loss = 0.0;
  double mean_rollout_cost = 0.0;
  std::size_t states = 0;
};

IterationResult train_iteration(std::span<const std::size_t> batch, const std::vector<Instance>& train, Models& models,
                                const TrainConfig& cfg, const CostSpec& costs, Rng& rng, Phase phase,
                                const std::vector<ReferencePlan>* references, Optimizers& optimizers);

struct LogRecord {
  std::size_t iteration = 0;
  Phase phase = Phase::self;
  double loss = 0.0;
  double rollout_cost = 0.0;
  std::optional<double> val_auroc;
};

nlohmann::json log_record_to_json(const LogRecord& r);

struct TrainResult {
  Models models;
  std::vector<LogRecord> log;
};

// Warmup iterations on reference-plan states, then self-iterative iterations
// on on-policy states. Returns the last iterate.
TrainResult train(Models models, const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
                  const CostSpec& costs, const TrainConfig& cfg,
                  const std::function<void(const LogRecord&)>& on_log = {});

}  // namespace react
