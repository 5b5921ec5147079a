#pragma once

#include "react/data.hpp"
#include "react/model.hpp"
#include "react/rng.hpp"

#include <string>

namespace testing {

inline react::Architecture tiny_arch() {
  react::Architecture a;
  a.planner_hidden = {8, 6};
  a.predictor_hidden = {6, 5};
  a.time_embedding_dim = 4;
  return a;
}

inline react::Instance random_instance(const react::Dims& dims, react::Rng& rng, const std::string& id = "i0") {
  react::Instance inst;
  inst.id = id;
  inst.context = react::Vector(static_cast<Eigen::Index>(dims.d_s));
  for (auto& v : inst.context) v = rng.normal();
  inst.temporal = react::Grid(static_cast<Eigen::Index>(dims.T), static_cast<Eigen::Index>(dims.d));
  for (Eigen::Index i = 0; i < inst.temporal.size(); ++i) inst.temporal.data()[i] = rng.normal();
  for (std::size_t t = 0; t < dims.T; ++t) inst.labels.push_back(static_cast<int>(rng.below(dims.C)));
  return inst;
}

inline react::CostSpec unit_costs(const react::Dims& dims) {
  return {react::Vector::Ones(static_cast<Eigen::Index>(dims.d_s)),
          react::Vector::Ones(static_cast<Eigen::Index>(dims.d))};
}

inline react::CostSpec random_costs(const react::Dims& dims, react::Rng& rng) {
  react::CostSpec c = unit_costs(dims);
  for (auto& v : c.context) v = 0.1 + rng.uniform();
  for (auto& v : c.temporal) v = 0.1 + rng.uniform();
  return c;
}

inline react::DatasetManifest manifest_for(const react::Dims& dims) {
  react::DatasetManifest m;
  m.dims = dims;
  m.context_costs = react::Vector::Ones(static_cast<Eigen::Index>(dims.d_s));
  m.temporal_costs = react::Vector::Ones(static_cast<Eigen::Index>(dims.d));
  for (std::size_t j = 0; j < dims.d_s; ++j) m.context_names.push_back("s" + std::to_string(j));
  for (std::size_t j = 0; j < dims.d; ++j) m.temporal_names.push_back("f" + std::to_string(j));
  return m;
}

// Sets the planner's final bias so every logit equals `value` regardless of input.
inline void force_planner_logits(react::Models& m, double value) {
  auto params = m.planner.mlp().params();
  params[params.size() - 2]->value.setZero();
  params.back()->value.setConstant(value);
}

}  // namespace testing
