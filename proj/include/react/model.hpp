#pragma once

#include "react/gating.hpp"
#include "react/nn.hpp"
#include "react/types.hpp"

#include <vector>

namespace react {

struct Architecture {
  std::vector<std::size_t> planner_hidden{512, 256, 128};
  std::vector<std::size_t> predictor_hidden{64, 64, 64};
  std::size_t time_embedding_dim = 64;

  bool operator==(const Architecture&) const = default;
};

// Population-level onboarding mask logits.
struct ContextSelector {
  nn::ParamTensor alpha;  // d_s x 1
};

// Maps (masked history, t, masked context) to a T x d grid of acquisition logits.
// Input layout: [flatten(masked history) (T*d) | time embedding(t) | masked context (d_s)].
class Planner {
 public:
  Planner() = default;
  Planner(const Dims& dims, const Architecture& arch);

  std::size_t input_dim() const { return mlp_.spec().input_dim; }
  std::size_t time_embedding_dim() const { return embedding_dim_; }

  void write_input(const Grid& masked_history, std::size_t t, const Vector& context_masked,
                   double* out) const;
  Vector make_input(const Grid& masked_history, std::size_t t, const Vector& context_masked) const;

  Grid logits(const Grid& masked_history, std::size_t t, const Vector& context_masked) const;

  nn::Mlp& mlp() { return mlp_; }
  const nn::Mlp& mlp() const { return mlp_; }
  const Dims& dims() const { return dims_; }

 private:
  Dims dims_;
  std::size_t embedding_dim_ = 0;
  nn::Mlp mlp_;
};

// Class probabilities at a target step. Input layout:
// [flatten(masked history) (T*d) | masked context (d_s) | t'/T].
class Predictor {
 public:
  Predictor() = default;
  Predictor(const Dims& dims, const Architecture& arch);

  std::size_t input_dim() const { return mlp_.spec().input_dim; }

  void write_input(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime,
                   double* out) const;
  Vector make_input(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime) const;

  Vector logits(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime) const;
  Vector predict(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime) const;

  nn::Mlp& mlp() { return mlp_; }
  const nn::Mlp& mlp() const { return mlp_; }
  const Dims& dims() const { return dims_; }

 private:
  Dims dims_;
  nn::Mlp mlp_;
};

struct Models {
  Dims dims;
  Architecture arch;
  double tau = gating::kDefaultTemperature;
  ContextSelector selector;
  Planner planner;
  Predictor predictor;

  void zero_grad();
  std::vector<nn::ParamTensor*> policy_params();  // alpha then planner
  std::vector<nn::ParamTensor*> predictor_params();
  bool all_finite() const;
};

// alpha = 0, MLPs He-uniform; deterministic in `seed`.
Models init_models(const Dims& dims, std::uint64_t seed, const Architecture& arch = {},
                   double tau = gating::kDefaultTemperature);

BitVector context_mask(const ContextSelector& selector, gating::GateMode mode, double tau, Rng* rng);

Vector apply_mask(const Vector& values, const BitVector& mask);
Grid apply_mask(const Grid& values, const BitGrid& mask);

}  // namespace react
