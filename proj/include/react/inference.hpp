#pragma once

#include "react/costs.hpp"
#include "react/data.hpp"
#include "react/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace react {

struct StepRecord {
  std::size_t t = 0;        // 1..T
  Vector prediction;        // class probabilities
  BitVector acquired;       // d bits, possibly all zero
  bool replanned = false;
  double cost = 0.0;        // temporal cost charged at this step
};

struct TrajectoryRecord {
  std::string id;
  BitVector context_mask;
  std::vector<StepRecord> steps;
  std::optional<std::size_t> termination_step;  // step at which the plan became empty
  double context_cost = 0.0;
  double temporal_cost = 0.0;
  double total_cost = 0.0;

  // T x d grid of all temporal acquisitions.
  BitGrid acquired_grid() const;
};

struct NextAcquisition {
  std::size_t t = 0;
  BitVector mask;
};

// Earliest row strictly after t with a nonzero mask; nullopt means termination.
std::optional<NextAcquisition> next_acquisition(const BitGrid& plan, std::size_t t);

struct InferenceOptions {
  // Replaces the learned context mask (REACT-all / REACT-none ablations).
  std::optional<BitVector> context_override;
};

// Deterministic acquire-and-replan rollout for one instance.
TrajectoryRecord infer(const Models& models, const Instance& inst, const CostSpec& costs,
                       const InferenceOptions& opts = {});

struct CostSummary {
  std::size_t n = 0;
  double total = 0.0;
  double temporal = 0.0;
  double context = 0.0;
};

// Arithmetic means; nullopt for an empty record set.
std::optional<CostSummary> summarize_costs(std::span<const TrajectoryRecord> records);

struct DatasetInference {
  std::vector<TrajectoryRecord> records;
  std::optional<CostSummary> summary;
};

// Runs infer over every instance, OpenMP-parallel across instances.
DatasetInference infer_dataset(const Models& models, std::span<const Instance> instances, const CostSpec& costs,
                               const InferenceOptions& opts = {});

// Hard-thresholded planner output at (history, t), restricted to rows after t.
BitGrid plan_after(const Models& models, const Grid& history, std::size_t t, const Vector& context_masked);

nlohmann::json record_to_json(const TrajectoryRecord& r);
TrajectoryRecord record_from_json(const nlohmann::json& j);
nlohmann::json records_to_json(std::span<const TrajectoryRecord> records);
std::vector<TrajectoryRecord> records_from_json(const nlohmann::json& j);
void save_records(std::span<const TrajectoryRecord> records, const std::filesystem::path& path);
std::vector<TrajectoryRecord> load_records(const std::filesystem::path& path);

}  // namespace react
