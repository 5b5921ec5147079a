#include "react/inference.hpp"

#include "react/errors.hpp"
#include "react/objective.hpp"

#include <fstream>

namespace react {

using nlohmann::json;

BitGrid TrajectoryRecord::acquired_grid() const {
  const auto T = static_cast<Eigen::Index>(steps.size());
  const Eigen::Index d = steps.empty() ? 0 : steps.front().acquired.size();
  BitGrid g(T, d);
  for (Eigen::Index t = 0; t < T; ++t) g.row(t) = steps[static_cast<std::size_t>(t)].acquired.transpose();
  return g;
}

std::optional<NextAcquisition> next_acquisition(const BitGrid& plan, std::size_t t) {
  for (auto r = static_cast<Eigen::Index>(t); r < plan.rows(); ++r)
    if ((plan.row(r).array() != 0).any()) return NextAcquisition{static_cast<std::size_t>(r + 1), plan.row(r).transpose()};
  return std::nullopt;
}

BitGrid plan_after(const Models& models, const Grid& history, std::size_t t, const Vector& context_masked) {
  const Grid logits = models.planner.logits(history, t, context_masked);
  BitGrid plan(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    plan.data()[i] = gating::st_gate(logits.data()[i], 0.0, 1.0).value;
  return keep_after(plan, t);
}

TrajectoryRecord infer(const Models& models, const Instance& inst, const CostSpec& costs,
                       const InferenceOptions& opts) {
  if (!models.all_finite()) throw CheckpointError("infer: model parameters are not finite");
  const Dims& dims = models.dims;
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  if (static_cast<std::size_t>(inst.temporal.rows()) != dims.T || static_cast<std::size_t>(inst.temporal.cols()) != dims.d ||
      static_cast<std::size_t>(inst.context.size()) != dims.d_s)
    throw InputError("infer: instance '" + inst.id + "' does not match model dimensions");

  TrajectoryRecord rec;
  rec.id = inst.id;
  // Stage 1: onboarding context, then the initial plan from an empty history.
  if (opts.context_override) {
    if (static_cast<std::size_t>(opts.context_override->size()) != dims.d_s)
      throw InputError("infer: context override length mismatch");
    rec.context_mask = *opts.context_override;
  } else {
    rec.context_mask = context_mask(models.selector, gating::GateMode::deterministic, 1.0, nullptr);
  }
  const Vector s_tilde = apply_mask(inst.context, rec.context_mask);
  rec.context_cost = context_cost(rec.context_mask, costs);

  Grid history = Grid::Zero(T, d);
  std::optional<NextAcquisition> next = next_acquisition(plan_after(models, history, 0, s_tilde), 0);
  if (!next) rec.termination_step = 0;

  // Stage 2: acquire and replan only at planned steps; predict every step.
  for (Eigen::Index t = 1; t <= T; ++t) {
    StepRecord step;
    step.t = static_cast<std::size_t>(t);
    step.acquired = BitVector::Zero(d);
    if (next && next->t == step.t) {
      step.acquired = next->mask;
      for (Eigen::Index j = 0; j < d; ++j)
        if (step.acquired[j]) history(t - 1, j) = inst.temporal(t - 1, j);
      step.cost = costs.temporal.dot(step.acquired.cast<double>());
      rec.temporal_cost += step.cost;
      next = next_acquisition(plan_after(models, history, step.t, s_tilde), step.t);
      step.replanned = true;
      if (!next) rec.termination_step = step.t;
    }
    step.prediction = models.predictor.predict(history, s_tilde, step.t);
    rec.steps.push_back(std::move(step));
  }
  rec.total_cost = rec.context_cost + rec.temporal_cost;
  return rec;
}

std::optional<CostSummary> summarize_costs(std::span<const TrajectoryRecord> records) {
  if (records.empty()) return std::nullopt;
  CostSummary s;
  s.n = records.size();
  for (const auto& r : records) {
    s.total += r.total_cost;
    s.temporal += r.temporal_cost;
    s.context += r.context_cost;
  }
  const double n = static_cast<double>(records.size());
  s.total /= n;
  s.temporal /= n;
  s.context /= n;
  return s;
}

DatasetInference infer_dataset(const Models& models, std::span<const Instance> instances, const CostSpec& costs,
                               const InferenceOptions& opts) {
  if (!models.all_finite()) throw CheckpointError("infer: model parameters are not finite");
  DatasetInference out;
  out.records.resize(instances.size());
  const auto n = static_cast<std::ptrdiff_t>(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out.records[static_cast<std::size_t>(i)] = infer(models, instances[static_cast<std::size_t>(i)], costs, opts);
  out.summary = summarize_costs(out.records);
  return out;
}

namespace {

std::vector<int> bits_to_ints(const BitVector& v) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

BitVector bits_from_json(const json& j) {
  BitVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const int b = j[i].get<int>();
    if (b != 0 && b != 1) throw DataError("records: mask entries must be 0 or 1");
    v[static_cast<Eigen::Index>(i)] = static_cast<std::uint8_t>(b);
  }
  return v;
}

}  // namespace

json record_to_json(const TrajectoryRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"t", s.t},
                     {"prediction", std::vector<double>(s.prediction.data(), s.prediction.data() + s.prediction.size())},
                     {"acquired", bits_to_ints(s.acquired)},
                     {"replanned", s.replanned},
                     {"cost", s.cost}});
  json j{{"id", r.id}, {"context_mask", bits_to_ints(r.context_mask)}, {"steps", steps}};
  j["termination_step"] = r.termination_step ? json(*r.termination_step) : json(nullptr);
  j["costs"] = {{"context", r.context_cost}, {"temporal", r.temporal_cost}, {"total", r.total_cost}};
  return j;
}

TrajectoryRecord record_from_json(const json& j) {
  try {
    TrajectoryRecord r;
    r.id = j.at("id").get<std::string>();
    r.context_mask = bits_from_json(j.at("context_mask"));
    for (const auto& s : j.at("steps")) {
      StepRecord step;
      step.t = s.at("t").get<std::size_t>();
      const auto p = s.at("prediction").get<std::vector<double>>();
      step.prediction = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
      step.acquired = bits_from_json(s.at("acquired"));
      step.replanned = s.at("replanned").get<bool>();
      step.cost = s.value("cost", 0.0);
      r.steps.push_back(std::move(step));
    }
    if (!j.at("termination_step").is_null()) r.termination_step = j["termination_step"].get<std::size_t>();
    const auto& c = j.at("costs");
    r.context_cost = c.at("context").get<double>();
    r.temporal_cost = c.at("temporal").get<double>();
    r.total_cost = c.at("total").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("records: malformed trajectory record: ") + e.what());
  }
}

json records_to_json(std::span<const TrajectoryRecord> records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr;
}

std::vector<TrajectoryRecord> records_from_json(const json& j) {
  if (!j.is_array()) throw DataError("records: expected an array");
  std::vector<TrajectoryRecord> out;
  for (const auto& r : j) out.push_back(record_from_json(r));
  return out;
}

void save_records(std::span<const TrajectoryRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write records file " + path.string());
  out << records_to_json(records).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TrajectoryRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return records_from_json(j);
}

}  // namespace react
