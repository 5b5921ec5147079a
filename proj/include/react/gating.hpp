#pragma once

#include "react/rng.hpp"
#include "react/types.hpp"

#include <cstdint>

namespace react::gating {

// Uniform draws are clamped to [kUniformClamp, 1 - kUniformClamp] so the
// double log stays finite.
inline constexpr double kUniformClamp = 1e-12;
inline constexpr double kDefaultTemperature = 1.0;

double sigmoid(double z);
// sigma'(z) = sigma(z) (1 - sigma(z))
double sigmoid_derivative(double z);

// g = -log(-log u)
double sample_gumbel(double u);
double draw_gumbel(Rng& rng);

// Straight-through gate for one logit with fixed noise. The forward value is
// the hard threshold of the relaxed proxy, the gradient is that of the proxy.
struct Gate {
  std::uint8_t value = 0;  // 1 iff relaxed > 0.5 (strict)
  double relaxed = 0.0;    // sigma((l + g) / tau)
  double grad = 0.0;       // d relaxed / d l
};

Gate st_gate(double logit, double noise, double tau);

enum class GateMode { stochastic, deterministic };

struct GateVector {
  BitVector mask;
  Vector relaxed;
  Vector grad;
};

// Stochastic mode draws independent Gumbel noise per entry from `rng`;
// deterministic mode uses zero noise (threshold sigma(l) > 0.5).
GateVector gate_vector(const Vector& logits, GateMode mode, double tau, Rng* rng);
GateVector gate_vector(const Vector& logits, const Vector& noise, double tau);

}  // namespace react::gating
