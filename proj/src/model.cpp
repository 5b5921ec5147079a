#include "react/model.hpp"

#include "react/costs.hpp"
#include "react/errors.hpp"

#include <cmath>
#include <sstream>

namespace react {

void CostSpec::validate(const Dims& dims) const {
  if (static_cast<std::size_t>(context.size()) != dims.d_s ||
      static_cast<std::size_t>(temporal.size()) != dims.d)
    throw InputError("costs: length does not match dimensions");
  if ((context.array() < 0.0).any() || (temporal.array() < 0.0).any() || !context.allFinite() ||
      !temporal.allFinite())
    throw InputError("costs: entries must be finite and nonnegative");
}

namespace {

void check_history(const Dims& dims, const Grid& history) {
  if (static_cast<std::size_t>(history.rows()) != dims.T || static_cast<std::size_t>(history.cols()) != dims.d) {
    std::ostringstream msg;
    msg << "history grid is " << history.rows() << "x" << history.cols() << ", expected " << dims.T << "x"
        << dims.d;
    throw ConfigError(msg.str());
  }
}

void check_context(const Dims& dims, const Vector& context) {
  if (static_cast<std::size_t>(context.size()) != dims.d_s) throw ConfigError("context length mismatch");
}

}  // namespace

Planner::Planner(const Dims& dims, const Architecture& arch)
    : dims_(dims), embedding_dim_(arch.time_embedding_dim) {
  if (dims.T == 0 || dims.d == 0) throw ConfigError("planner: T and d must be positive");
  if (embedding_dim_ % 2 != 0) throw ConfigError("planner: time embedding dim must be even");
  nn::MlpSpec spec;
  spec.input_dim = dims.grid_size() + embedding_dim_ + dims.d_s;
  spec.hidden_dims = arch.planner_hidden;
  spec.output_dim = dims.grid_size();
  mlp_ = nn::Mlp(spec);
}

void Planner::write_input(const Grid& masked_history, std::size_t t, const Vector& context_masked,
                          double* out) const {
  check_history(dims_, masked_history);
  check_context(dims_, context_masked);
  if (t > dims_.T) throw InputError("planner: t > T");
  const std::size_t n = dims_.grid_size();
  std::copy(masked_history.data(), masked_history.data() + n, out);
  const Vector emb = nn::sinusoidal_time_embedding(t, dims_.T, embedding_dim_);
  std::copy(emb.data(), emb.data() + emb.size(), out + n);
  std::copy(context_masked.data(), context_masked.data() + context_masked.size(), out + n + embedding_dim_);
}

Vector Planner::make_input(const Grid& masked_history, std::size_t t, const Vector& context_masked) const {
  Vector in(static_cast<Eigen::Index>(input_dim()));
  write_input(masked_history, t, context_masked, in.data());
  return in;
}

Grid Planner::logits(const Grid& masked_history, std::size_t t, const Vector& context_masked) const {
  const Vector in = make_input(masked_history, t, context_masked);
  const Vector out = mlp_.forward(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())));
  return Eigen::Map<const Grid>(out.data(), static_cast<Eigen::Index>(dims_.T), static_cast<Eigen::Index>(dims_.d));
}

Predictor::Predictor(const Dims& dims, const Architecture& arch) : dims_(dims) {
  if (dims.T == 0 || dims.d == 0) throw ConfigError("predictor: T and d must be positive");
  if (dims.C < 2) throw ConfigError("predictor: need at least two classes");
  nn::MlpSpec spec;
  spec.input_dim = dims.grid_size() + dims.d_s + 1;
  spec.hidden_dims = arch.predictor_hidden;
  spec.output_dim = dims.C;
  mlp_ = nn::Mlp(spec);
}

void Predictor::write_input(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime,
                            double* out) const {
  check_history(dims_, masked_history);
  check_context(dims_, context_masked);
  if (t_prime < 1 || t_prime > dims_.T) throw InputError("predictor: target step out of range");
  const std::size_t n = dims_.grid_size();
  std::copy(masked_history.data(), masked_history.data() + n, out);
  std::copy(context_masked.data(), context_masked.data() + context_masked.size(), out + n);
  out[n + dims_.d_s] = static_cast<double>(t_prime) / static_cast<double>(dims_.T);
}

Vector Predictor::make_input(const Grid& masked_history, const Vector& context_masked,
                             std::size_t t_prime) const {
  Vector in(static_cast<Eigen::Index>(input_dim()));
  write_input(masked_history, context_masked, t_prime, in.data());
  return in;
}

Vector Predictor::logits(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime) const {
  const Vector in = make_input(masked_history, context_masked, t_prime);
  return mlp_.forward(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())));
}

Vector Predictor::predict(const Grid& masked_history, const Vector& context_masked, std::size_t t_prime) const {
  const Vector z = logits(masked_history, context_masked, t_prime);
  return nn::softmax(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

void Models::zero_grad() {
  selector.alpha.zero_grad();
  planner.mlp().zero_grad();
  predictor.mlp().zero_grad();
}

std::vector<nn::ParamTensor*> Models::policy_params() {
  std::vector<nn::ParamTensor*> out{&selector.alpha};
  for (auto* p : planner.mlp().params()) out.push_back(p);
  return out;
}

std::vector<nn::ParamTensor*> Models::predictor_params() { return predictor.mlp().params(); }

bool Models::all_finite() const {
  if (!selector.alpha.value.allFinite()) return false;
  for (const auto* p : planner.mlp().params())
    if (!p->value.allFinite()) return false;
  for (const auto* p : predictor.mlp().params())
    if (!p->value.allFinite()) return false;
  return true;
}

Models init_models(const Dims& dims, std::uint64_t seed, const Architecture& arch, double tau) {
  if (dims.d_s == 0 && dims.d == 0) throw ConfigError("init: empty dimensions");
  if (!(tau > 0.0)) throw ConfigError("init: temperature must be positive");
  Models m;
  m.dims = dims;
  m.arch = arch;
  m.tau = tau;
  m.selector.alpha = nn::ParamTensor(static_cast<Eigen::Index>(dims.d_s), 1);
  m.planner = Planner(dims, arch);
  m.predictor = Predictor(dims, arch);
  Rng planner_rng(Rng::combine(seed, 1));
  Rng predictor_rng(Rng::combine(seed, 2));
  m.planner.mlp().init_he_uniform(planner_rng);
  m.predictor.mlp().init_he_uniform(predictor_rng);
  return m;
}

BitVector context_mask(const ContextSelector& selector, gating::GateMode mode, double tau, Rng* rng) {
  return gating::gate_vector(selector.alpha.value.col(0), mode, tau, rng).mask;
}

Vector apply_mask(const Vector& values, const BitVector& mask) {
  if (values.size() != mask.size()) throw InputError("mask length mismatch");
  return values.cwiseProduct(mask.cast<double>());
}

Grid apply_mask(const Grid& values, const BitGrid& mask) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) throw InputError("mask shape mismatch");
  return values.cwiseProduct(mask.cast<double>());
}

}  // namespace react
