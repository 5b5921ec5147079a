#pragma once

#include "react/inference.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace react {

struct GraphNode {
  std::size_t feature = 0;
  std::size_t t = 0;
  std::size_t count = 0;   // records acquiring `feature` at `t`
  double frequency = 0.0;  // count / n_records
};

struct GraphEdge {
  std::size_t from = 0, to = 0;  // node indices
  std::size_t count = 0;         // records exhibiting the transition
  // Sum over records of 1 / (features acquired at the record's next step),
  // divided by n_records. Per source node the weights sum to at most the
  // node frequency; stopping takes the remainder.
  double weight = 0.0;
};

struct TransitionGraph {
  std::size_t n_records = 0;
  std::vector<GraphNode> nodes;  // sorted by (t, feature)
  std::vector<GraphEdge> edges;  // sorted by (from, to)

  std::optional<std::size_t> find(std::size_t feature, std::size_t t) const;
};

// Edge m@t -> n@t' for every record that acquires m at t and n at its next
// acquisition step t' > t.
TransitionGraph build_transition_graph(std::span<const TrajectoryRecord> records);

// Mean cost charged at each step t = 1..T (context cost is not included).
std::vector<double> mean_step_costs(std::span<const TrajectoryRecord> records);

// Key -1 collects records without a termination step.
std::map<long, std::size_t> termination_histogram(std::span<const TrajectoryRecord> records);

std::string to_dot(const TransitionGraph& g, std::span<const std::string> feature_names = {});
nlohmann::json graph_to_json(const TransitionGraph& g, std::span<const std::string> feature_names = {});

// Compact per-instance view: acquired feature indices per step and the stop point.
nlohmann::json trajectory_summary_json(const TrajectoryRecord& r);

// Writes trajectories.json, graph.json, graph.dot, step_costs.csv and
// termination_histogram.csv into out_dir (created if missing).
void export_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& out_dir,
                         std::span<const std::string> feature_names = {});

}  // namespace react
