#include "react/policies.hpp"

#include "react/errors.hpp"
#include "react/rng.hpp"

#include <sstream>

namespace react {

void PolicySpec::validate() const {
  if (kind == PolicyKind::random_rate && !(rate >= 0.0 && rate <= 1.0))
    throw ConfigError("policy: random_rate must lie in [0,1]");
  if (kind == PolicyKind::fixed_interval && interval == 0) throw ConfigError("policy: fixed_interval must be >= 1");
}

PolicySpec parse_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  PolicySpec p;
  try {
    if (name == "react") p.kind = PolicyKind::react;
    else if (name == "react_all") p.kind = PolicyKind::react_all;
    else if (name == "react_none") p.kind = PolicyKind::react_none;
    else if (name == "acquire_all") p.kind = PolicyKind::acquire_all;
    else if (name == "acquire_none") p.kind = PolicyKind::acquire_none;
    else if (name == "random_rate") {
      p.kind = PolicyKind::random_rate;
      if (!arg.empty()) p.rate = std::stod(arg);
    } else if (name == "fixed_interval") {
      p.kind = PolicyKind::fixed_interval;
      if (!arg.empty()) p.interval = std::stoul(arg);
    } else {
      throw ConfigError("policy: unknown mode '" + name + "'");
    }
  } catch (const std::logic_error&) {
    throw ConfigError("policy: bad argument in '" + text + "'");
  }
  p.validate();
  return p;
}

std::string to_string(const PolicySpec& p) {
  std::ostringstream out;
  switch (p.kind) {
    case PolicyKind::react: out << "react"; break;
    case PolicyKind::react_all: out << "react_all"; break;
    case PolicyKind::react_none: out << "react_none"; break;
    case PolicyKind::random_rate: out << "random_rate:" << p.rate; break;
    case PolicyKind::fixed_interval: out << "fixed_interval:" << p.interval; break;
    case PolicyKind::acquire_all: out << "acquire_all"; break;
    case PolicyKind::acquire_none: out << "acquire_none"; break;
  }
  return out.str();
}

TrajectoryRecord execute_plan(const Predictor& predictor, const Instance& inst, const Plan& plan,
                              const CostSpec& costs) {
  const Dims& dims = predictor.dims();
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  TrajectoryRecord rec;
  rec.id = inst.id;
  rec.context_mask = plan.context;
  const Vector s_tilde = apply_mask(inst.context, plan.context);
  rec.context_cost = context_cost(plan.context, costs);
  Grid history = Grid::Zero(T, d);
  std::size_t last = 0;
  for (Eigen::Index t = 1; t <= T; ++t) {
    StepRecord step;
    step.t = static_cast<std::size_t>(t);
    step.acquired = plan.temporal.row(t - 1).transpose();
    for (Eigen::Index j = 0; j < d; ++j)
      if (step.acquired[j]) history(t - 1, j) = inst.temporal(t - 1, j);
    step.cost = costs.temporal.dot(step.acquired.cast<double>());
    rec.temporal_cost += step.cost;
    if (step.acquired.any()) last = step.t;
    step.prediction = predictor.predict(history, s_tilde, step.t);
    rec.steps.push_back(std::move(step));
  }
  rec.termination_step = last;
  rec.total_cost = rec.context_cost + rec.temporal_cost;
  return rec;
}

Plan baseline_plan(const PolicySpec& spec, const Dims& dims, std::size_t index) {
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto T = static_cast<Eigen::Index>(dims.T);
  const auto d = static_cast<Eigen::Index>(dims.d);
  Plan p{BitVector::Zero(ds), BitGrid::Zero(T, d)};
  switch (spec.kind) {
    case PolicyKind::acquire_all:
      p.context.setOnes();
      p.temporal.setOnes();
      break;
    case PolicyKind::acquire_none:
      break;
    case PolicyKind::fixed_interval:
      p.context.setOnes();
      for (Eigen::Index t = 1; t <= T; ++t)
        if ((static_cast<std::size_t>(t) - 1) % spec.interval == 0) p.temporal.row(t - 1).setOnes();
      break;
    case PolicyKind::random_rate: {
      Rng rng(Rng::combine(spec.seed, index));
      for (Eigen::Index j = 0; j < ds; ++j) p.context[j] = rng.uniform() < spec.rate ? 1 : 0;
      for (Eigen::Index i = 0; i < T * d; ++i) p.temporal.data()[i] = rng.uniform() < spec.rate ? 1 : 0;
      break;
    }
    default:
      throw InputError("baseline_plan: not a fixed-plan policy");
  }
  return p;
}

PolicyResult ablation_policy(const PolicySpec& spec, const Models& models, std::span<const Instance> instances,
                             const CostSpec& costs) {
  spec.validate();
  PolicyResult out;
  const auto ds = static_cast<Eigen::Index>(models.dims.d_s);
  switch (spec.kind) {
    case PolicyKind::react:
    case PolicyKind::react_all:
    case PolicyKind::react_none: {
      InferenceOptions opts;
      if (spec.kind == PolicyKind::react_all) opts.context_override = BitVector::Ones(ds);
      if (spec.kind == PolicyKind::react_none) opts.context_override = BitVector::Zero(ds);
      out.records = infer_dataset(models, instances, costs, opts).records;
      break;
    }
    default: {
      out.records.resize(instances.size());
      const auto n = static_cast<std::ptrdiff_t>(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        out.records[ui] = execute_plan(models.predictor, instances[ui], baseline_plan(spec, models.dims, ui), costs);
      }
      break;
    }
  }
  out.summary = summarize_costs(out.records);
  out.metrics = pooled_metrics(out.records, instances);
  return out;
}

}  // namespace react
