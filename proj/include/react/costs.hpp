#pragma once

#include "react/types.hpp"

namespace react {

// One-time context costs and per-visit temporal costs.
struct CostSpec {
  Vector context;   // length d_s
  Vector temporal;  // length d

  void validate(const Dims& dims) const;
  double context_total() const { return context.sum(); }
  double temporal_total() const { return temporal.sum(); }
};

}  // namespace react
