#include "react/gating.hpp"

#include "react/errors.hpp"

#include <algorithm>
#include <cmath>

namespace react::gating {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sigmoid_derivative(double z) {
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

double sample_gumbel(double u) {
  u = std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
  return -std::log(-std::log(u));
}

double draw_gumbel(Rng& rng) { return sample_gumbel(rng.uniform()); }

Gate st_gate(double logit, double noise, double tau) {
  if (!(tau > 0.0)) throw ConfigError("gate: temperature must be positive");
  const double z = (logit + noise) / tau;
  Gate g;
  g.relaxed = sigmoid(z);
  g.value = g.relaxed > 0.5 ? 1 : 0;
  g.grad = g.relaxed * (1.0 - g.relaxed) / tau;
  return g;
}

GateVector gate_vector(const Vector& logits, const Vector& noise, double tau) {
  if (noise.size() != logits.size()) throw InputError("gate: noise/logit length mismatch");
  GateVector out;
  out.mask.resize(logits.size());
  out.relaxed.resize(logits.size());
  out.grad.resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const Gate g = st_gate(logits[i], noise[i], tau);
    out.mask[i] = g.value;
    out.relaxed[i] = g.relaxed;
    out.grad[i] = g.grad;
  }
  return out;
}

GateVector gate_vector(const Vector& logits, GateMode mode, double tau, Rng* rng) {
  Vector noise = Vector::Zero(logits.size());
  if (mode == GateMode::stochastic) {
    if (rng == nullptr) throw ConfigError("gate: stochastic mode requires a generator");
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = draw_gumbel(*rng);
  }
  return gate_vector(logits, noise, tau);
}

}  // namespace react::gating
