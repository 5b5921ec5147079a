#pragma once

// Independent checks of the acquisition-rollout contract, shared by the unit
// and acceptance suites. Each returns an empty string on success.

#include "react/inference.hpp"
#include "react/objective.hpp"

#include <sstream>
#include <string>

namespace checks {

inline bool same_record(const react::TrajectoryRecord& a, const react::TrajectoryRecord& b) {
  if (a.id != b.id || a.context_mask != b.context_mask || a.termination_step != b.termination_step ||
      a.context_cost != b.context_cost || a.temporal_cost != b.temporal_cost || a.total_cost != b.total_cost ||
      a.steps.size() != b.steps.size())
    return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& x = a.steps[i];
    const auto& y = b.steps[i];
    if (x.t != y.t || x.prediction != y.prediction || x.acquired != y.acquired || x.replanned != y.replanned ||
        x.cost != y.cost)
      return false;
  }
  return true;
}

// Structural invariants of a single record. Fixed-plan baselines never replan.
inline std::string record_invariants(const react::TrajectoryRecord& r, const react::CostSpec& costs, std::size_t T,
                                     bool adaptive = true) {
  std::ostringstream err;
  if (r.steps.size() != T) err << "expected " << T << " steps; ";
  const double ctx = costs.context.dot(r.context_mask.cast<double>());
  if (r.context_cost != ctx) err << "context charged " << r.context_cost << " vs " << ctx << "; ";
  double temporal = 0.0;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    if (s.t != i + 1) err << "step index " << s.t << " at position " << i << "; ";
    const bool acquired = (s.acquired.array() != 0).any();
    if (s.replanned != (adaptive && acquired)) err << "replanned flag differs from acquisition at t=" << s.t << "; ";
    if (s.cost != costs.temporal.dot(s.acquired.cast<double>())) err << "step cost mismatch at t=" << s.t << "; ";
    if (r.termination_step && s.t > *r.termination_step && (acquired || s.cost != 0.0))
      err << "cost after termination at t=" << s.t << "; ";
    if (std::abs(s.prediction.sum() - 1.0) > 1e-9 || (s.prediction.array() < 0.0).any())
      err << "prediction at t=" << s.t << " is not a distribution; ";
    temporal += s.cost;
  }
  if (std::abs(temporal - r.temporal_cost) > 1e-9) err << "temporal cost is not the sum of step costs; ";
  if (r.total_cost != r.context_cost + r.temporal_cost) err << "total != context + temporal; ";
  return err.str();
}

// Acquired-cell grid after each step only grows, and each cell is charged once.
inline std::string monotone_history(const react::TrajectoryRecord& r) {
  if (r.steps.empty()) return {};
  const auto d = r.steps.front().acquired.size();
  react::BitGrid seen = react::BitGrid::Zero(static_cast<Eigen::Index>(r.steps.size()), d);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const react::BitGrid before = seen;
    seen.row(static_cast<Eigen::Index>(i)) = r.steps[i].acquired.transpose();
    if (((before.array() != 0) && (seen.array() == 0)).any()) return "acquired history shrank";
    for (std::size_t k = 0; k < i; ++k)
      if (seen.row(static_cast<Eigen::Index>(k)) != before.row(static_cast<Eigen::Index>(k))) return "past row changed";
  }
  return {};
}

// Mutating raw values after time t must not change anything the record
// reports up to t.
inline std::string causality(const react::Models& models, const react::Instance& inst, const react::CostSpec& costs,
                             react::Rng& rng) {
  const auto base = react::infer(models, inst, costs);
  const auto T = static_cast<std::size_t>(inst.temporal.rows());
  for (std::size_t t = 0; t < T; ++t) {
    react::Instance mutated = inst;
    for (auto r = static_cast<Eigen::Index>(t); r < inst.temporal.rows(); ++r)
      for (Eigen::Index j = 0; j < inst.temporal.cols(); ++j) mutated.temporal(r, j) = 5.0 * rng.normal();
    const auto other = react::infer(models, mutated, costs);
    for (std::size_t k = 0; k < t; ++k) {
      if (other.steps[k].prediction != base.steps[k].prediction)
        return "prediction at t=" + std::to_string(k + 1) + " changed after mutating times > " + std::to_string(t);
      if (other.steps[k].acquired != base.steps[k].acquired)
        return "acquisition at t=" + std::to_string(k + 1) + " changed after mutating times > " + std::to_string(t);
    }
  }
  return {};
}

}  // namespace checks
