#pragma once

#include "react/costs.hpp"
#include "react/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace react {

// Per-feature affine transform fitted on the training split.
struct Standardization {
  Vector context_mean, context_std;
  Vector temporal_mean, temporal_std;
};

struct DatasetManifest {
  Dims dims;
  Vector context_costs;
  Vector temporal_costs;
  std::vector<std::string> context_names;
  std::vector<std::string> temporal_names;
  std::optional<Standardization> standardization;

  CostSpec costs() const { return {context_costs, temporal_costs}; }
  void validate() const;
};

struct Instance {
  std::string id;
  Vector context;           // d_s
  Grid temporal;            // T x d
  std::vector<int> labels;  // T, each in [0, C)
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Instance> instances;
};

// Throws DataError naming the instance id and offending field.
void validate_instance(const DatasetManifest& manifest, const Instance& inst);
void validate_dataset(const Dataset& ds);

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t n_instances = 1000;
  std::size_t d_s = 6;
  std::size_t d = 8;
  std::size_t T = 10;
  std::size_t C = 2;
  std::size_t informative_context = 2;
  std::size_t informative_temporal = 2;
  double ar_coefficient = 0.8;
  double noise_std = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s);

// Planted-signal generator. Informative temporal features follow AR(1)
// latents, distractors are white noise, informative context features shift a
// per-instance bias, and labels bucket the resulting score into C classes
// with thresholds calibrated on a pilot draw. Instance i depends only on
// (seed, i, spec).
Dataset generate_synthetic(const SyntheticSpec& spec);

struct Split {
  std::vector<Instance> train, val, test;
};

// Deterministic shuffled partition; fractions must be positive and sum to 1.
Split split(const std::vector<Instance>& instances, const std::array<double, 3>& fractions, std::uint64_t seed);

Standardization fit_standardization(const std::vector<Instance>& train, const Dims& dims);
void apply_standardization(const Standardization& s, std::vector<Instance>& instances);

}  // namespace react
