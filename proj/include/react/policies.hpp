#pragma once

#include "react/inference.hpp"
#include "react/metrics.hpp"
#include "react/model.hpp"
#include "react/objective.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace react {

enum class PolicyKind { react, react_all, react_none, random_rate, fixed_interval, acquire_all, acquire_none };

struct PolicySpec {
  PolicyKind kind = PolicyKind::react;
  double rate = 0.5;          // random_rate
  std::size_t interval = 1;   // fixed_interval
  std::uint64_t seed = 0;     // random_rate

  void validate() const;
};

// "react", "react_all", "random_rate:0.3", "fixed_interval:2", ...
PolicySpec parse_policy(const std::string& text);
std::string to_string(const PolicySpec& p);

// Runs a precomputed plan with no replanning: acquisitions follow the plan,
// predictions come from `predictor` at every step. termination_step is the
// last acquisition step (0 when nothing is acquired).
TrajectoryRecord execute_plan(const Predictor& predictor, const Instance& inst, const Plan& plan,
                              const CostSpec& costs);

// The fixed plan a non-adaptive baseline uses for instance `index`.
Plan baseline_plan(const PolicySpec& spec, const Dims& dims, std::size_t index);

struct PolicyResult {
  std::vector<TrajectoryRecord> records;
  std::optional<CostSummary> summary;
  ClassificationMetrics metrics;
};

// All modes predict with models.predictor. react_all / react_none force the
// context mask and keep the learned planner; the rest are fixed plans.
PolicyResult ablation_policy(const PolicySpec& spec, const Models& models, std::span<const Instance> instances,
                             const CostSpec& costs);

}  // namespace react
