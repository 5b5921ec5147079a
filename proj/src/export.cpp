#include "react/export.hpp"

#include "react/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace react {

using nlohmann::json;

namespace {

std::vector<std::size_t> acquired_features(const StepRecord& s) {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < s.acquired.size(); ++j)
    if (s.acquired[j]) out.push_back(static_cast<std::size_t>(j));
  return out;
}

std::string feature_label(std::size_t f, std::span<const std::string> names) {
  return f < names.size() ? names[f] : "x" + std::to_string(f);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void check(const std::ofstream& out, const std::filesystem::path& p) {
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

std::optional<std::size_t> TransitionGraph::find(std::size_t feature, std::size_t t) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), std::pair{t, feature},
                                   [](const GraphNode& n, const std::pair<std::size_t, std::size_t>& key) {
                                     return std::pair{n.t, n.feature} < key;
                                   });
  if (it == nodes.end() || it->t != t || it->feature != feature) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

TransitionGraph build_transition_graph(std::span<const TrajectoryRecord> records) {
  TransitionGraph g;
  g.n_records = records.size();
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> node_counts;  // (t, feature)
  struct Acc {
    std::size_t count = 0;
    double weight = 0.0;
  };
  std::map<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>, Acc> edge_acc;

  for (const auto& r : records) {
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> acquisitions;
    for (const auto& s : r.steps) {
      auto f = acquired_features(s);
      if (f.empty()) continue;
      for (auto j : f) ++node_counts[{s.t, j}];
      acquisitions.emplace_back(s.t, std::move(f));
    }
    for (std::size_t k = 0; k + 1 < acquisitions.size(); ++k) {
      const auto& [t, from] = acquisitions[k];
      const auto& [t2, to] = acquisitions[k + 1];
      const double share = 1.0 / static_cast<double>(to.size());
      for (auto m : from)
        for (auto n : to) {
          auto& a = edge_acc[{{t, m}, {t2, n}}];
          ++a.count;
          a.weight += share;
        }
    }
  }

  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  for (const auto& [key, count] : node_counts)
    g.nodes.push_back({key.second, key.first, count, static_cast<double>(count) / n});
  for (const auto& [key, acc] : edge_acc) {
    const auto from = g.find(key.first.second, key.first.first);
    const auto to = g.find(key.second.second, key.second.first);
    g.edges.push_back({*from, *to, acc.count, acc.weight / n});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) { return std::pair{a.from, a.to} < std::pair{b.from, b.to}; });
  return g;
}

std::vector<double> mean_step_costs(std::span<const TrajectoryRecord> records) {
  std::size_t T = 0;
  for (const auto& r : records) T = std::max(T, r.steps.size());
  std::vector<double> sums(T, 0.0);
  for (const auto& r : records)
    for (const auto& s : r.steps)
      if (s.t >= 1 && s.t <= T) sums[s.t - 1] += s.cost;
  if (!records.empty())
    for (auto& v : sums) v /= static_cast<double>(records.size());
  return sums;
}

std::map<long, std::size_t> termination_histogram(std::span<const TrajectoryRecord> records) {
  std::map<long, std::size_t> h;
  for (const auto& r : records) ++h[r.termination_step ? static_cast<long>(*r.termination_step) : -1L];
  return h;
}

std::string to_dot(const TransitionGraph& g, std::span<const std::string> feature_names) {
  std::ostringstream out;
  out << "digraph trajectories {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    out << "  n" << i << " [label=\"" << feature_label(n.feature, feature_names) << "@" << n.t
        << "\", frequency=" << n.frequency << "];\n";
  }
  for (const auto& e : g.edges)
    out << "  n" << e.from << " -> n" << e.to << " [weight=" << e.weight << ", label=\"" << e.weight << "\"];\n";
  out << "}\n";
  return out.str();
}

json graph_to_json(const TransitionGraph& g, std::span<const std::string> feature_names) {
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"name", feature_label(n.feature, feature_names)},
                     {"t", n.t},
                     {"count", n.count},
                     {"frequency", n.frequency}});
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"count", e.count}, {"weight", e.weight}});
  return {{"n_records", g.n_records}, {"nodes", nodes}, {"edges", edges}};
}

json trajectory_summary_json(const TrajectoryRecord& r) {
  json acq = json::array();
  for (const auto& s : r.steps) {
    const auto f = acquired_features(s);
    if (!f.empty()) acq.push_back({{"t", s.t}, {"features", f}});
  }
  json j = record_to_json(r);
  j["acquisitions"] = acq;
  return j;
}

void export_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& out_dir,
                         std::span<const std::string> feature_names) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  json traj = json::array();
  for (const auto& r : records) traj.push_back(trajectory_summary_json(r));
  const auto graph = build_transition_graph(records);

  const auto write = [&](const std::string& name, const auto& emit) {
    const auto p = out_dir / name;
    auto out = open_out(p);
    emit(out);
    check(out, p);
  };
  write("trajectories.json", [&](std::ofstream& o) { o << traj.dump(1) << '\n'; });
  write("graph.json", [&](std::ofstream& o) { o << graph_to_json(graph, feature_names).dump(1) << '\n'; });
  write("graph.dot", [&](std::ofstream& o) { o << to_dot(graph, feature_names); });
  write("step_costs.csv", [&](std::ofstream& o) {
    o << "t,mean_cost\n";
    const auto costs = mean_step_costs(records);
    for (std::size_t t = 0; t < costs.size(); ++t) o << t + 1 << ',' << costs[t] << '\n';
  });
  write("termination_histogram.csv", [&](std::ofstream& o) {
    o << "termination_step,count\n";
    for (const auto& [step, count] : termination_histogram(records))
      o << (step < 0 ? std::string("none") : std::to_string(step)) << ',' << count << '\n';
  });
}

}  // namespace react
