#include "helpers.hpp"
#include "react/config.hpp"
#include "react/data.hpp"
#include "react/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace react;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

Dataset two_instances() {
  const Dims dims{2, 3, 4, 3};
  Dataset ds{testing::manifest_for(dims), {}};
  Rng rng(1);
  ds.instances.push_back(testing::random_instance(dims, rng, "a"));
  ds.instances.push_back(testing::random_instance(dims, rng, "b"));
  return ds;
}

void expect_data_error(const json& j, const std::string& fragment) {
  try {
    dataset_from_json(j);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("dataset: save/load round trip") {
  const Dataset ds = two_instances();
  const auto path = temp_file("react_ds_test.json");
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  CHECK(back.manifest.dims == ds.manifest.dims);
  CHECK(back.manifest.context_costs == ds.manifest.context_costs);
  CHECK(back.manifest.temporal_names == ds.manifest.temporal_names);
  REQUIRE(back.instances.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.instances[i].id == ds.instances[i].id);
    CHECK(back.instances[i].context == ds.instances[i].context);
    CHECK(back.instances[i].temporal == ds.instances[i].temporal);
    CHECK(back.instances[i].labels == ds.instances[i].labels);
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset: invariant violations name the instance and field") {
  const json good = dataset_to_json(two_instances());
  json bad = good;
  bad["instances"][1]["labels"][2] = 3;
  expect_data_error(bad, "instance 'b'");
  expect_data_error(bad, "label out of range");

  bad = good;
  bad["instances"][0]["context"].push_back(1.0);
  expect_data_error(bad, "context");

  bad = good;
  bad["instances"][0]["temporal"][1].erase(0);
  expect_data_error(bad, "temporal");

  bad = good;
  bad["manifest"]["d"] = 4;
  CHECK_THROWS_AS(dataset_from_json(bad), DataError);

  const auto path = temp_file("react_ds_broken.json");
  std::ofstream(path) << "{\"manifest\": ";
  CHECK_THROWS_AS(load_dataset(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(temp_file("react_missing_file.json")), IoError);
}

TEST_CASE("synthetic: deterministic and well-formed") {
  SyntheticSpec spec;
  spec.n_instances = 50;
  spec.seed = 3;
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  validate_dataset(a);
  REQUIRE(a.instances.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(a.instances[i].temporal == b.instances[i].temporal);
    CHECK(a.instances[i].labels == b.instances[i].labels);
  }
  spec.seed = 4;
  CHECK(generate_synthetic(spec).instances[0].temporal != a.instances[0].temporal);
}

TEST_CASE("synthetic: persistent latents give autocorrelated labels") {
  SyntheticSpec spec;
  spec.n_instances = 400;
  spec.ar_coefficient = 0.99;
  spec.noise_std = 0.0;
  const Dataset ds = generate_synthetic(spec);
  double agree = 0.0, pairs = 0.0;
  for (const auto& inst : ds.instances)
    for (std::size_t t = 1; t < inst.labels.size(); ++t) {
      agree += inst.labels[t] == inst.labels[t - 1];
      pairs += 1.0;
    }
  CHECK(agree / pairs > 0.8);
}

TEST_CASE("synthetic: both classes appear and informative features carry signal") {
  SyntheticSpec spec;
  spec.n_instances = 500;
  const Dataset ds = generate_synthetic(spec);
  double pos = 0.0, n = 0.0, cov_inf = 0.0, cov_dis = 0.0;
  for (const auto& inst : ds.instances)
    for (std::size_t t = 0; t < inst.labels.size(); ++t) {
      const double y = inst.labels[t] - 0.5;
      pos += inst.labels[t];
      n += 1.0;
      cov_inf += y * inst.temporal(static_cast<Eigen::Index>(t), 0);
      cov_dis += y * inst.temporal(static_cast<Eigen::Index>(t), 7);
    }
  CHECK(pos / n > 0.3);
  CHECK(pos / n < 0.7);
  CHECK(cov_inf / n > 0.1);
  CHECK(std::abs(cov_dis / n) < 0.05);
}

TEST_CASE("synthetic spec parsing is strict") {
  CHECK(synthetic_spec_from_json(json{{"n_instances", 10}, {"seed", 2}}).n_instances == 10);
  CHECK_THROWS_AS(synthetic_spec_from_json(json{{"instances", 10}}), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(json{{"ar_coefficient", 1.5}}), ConfigError);
}

TEST_CASE("split sizes and determinism") {
  SyntheticSpec spec;
  spec.n_instances = 1000;
  spec.T = 2;
  const Dataset ds = generate_synthetic(spec);
  const auto a = split(ds.instances, {0.64, 0.16, 0.20}, 5);
  CHECK(a.train.size() == 640);
  CHECK(a.val.size() == 160);
  CHECK(a.test.size() == 200);
  const auto b = split(ds.instances, {0.64, 0.16, 0.20}, 5);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& inst : *part) ids.insert(inst.id);
  CHECK(ids.size() == 1000);
  CHECK_THROWS_AS(split(ds.instances, {0.5, 0.5, 0.5}, 1), ConfigError);
  CHECK_THROWS_AS(split(ds.instances, {1.0, 0.0, 0.0}, 1), ConfigError);
}

TEST_CASE("standardization uses train statistics") {
  SyntheticSpec spec;
  spec.n_instances = 300;
  const Dataset ds = generate_synthetic(spec);
  auto parts = split(ds.instances, {0.64, 0.16, 0.20}, 1);
  const auto s = fit_standardization(parts.train, ds.manifest.dims);
  apply_standardization(s, parts.train);
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& inst : parts.train)
    for (Eigen::Index t = 0; t < inst.temporal.rows(); ++t) {
      sum += inst.temporal(t, 3);
      sq += inst.temporal(t, 3) * inst.temporal(t, 3);
      n += 1.0;
    }
  CHECK(std::abs(sum / n) < 1e-9);
  CHECK(std::abs(sq / n - 1.0) < 1e-6);
}

TEST_CASE("train config: defaults, strict keys, round trip") {
  const TrainConfig d;
  CHECK(d.batch_size == 64);
  CHECK(d.total_batches == 1000);
  CHECK(d.warmup_batches == 50);
  CHECK(d.K_candidates == 1000);
  CHECK(d.lr_pretrain == 1e-3);
  CHECK(d.lr_policy == 1e-3);
  CHECK(d.lr_predictor_joint == 1e-4);
  CHECK(d.dropout_rate == 0.4);
  CHECK(d.tau == 1.0);
  CHECK(d.arch.planner_hidden == std::vector<std::size_t>{512, 256, 128});
  CHECK(d.arch.predictor_hidden == std::vector<std::size_t>{64, 64, 64});

  TrainConfig c;
  c.lambda = 0.02;
  c.context_mode = ContextMode::none;
  c.arch.planner_hidden = {16};
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  CHECK(back.lambda == 0.02);
  CHECK(back.context_mode == ContextMode::none);
  CHECK(back.arch == c.arch);

  CHECK_THROWS_AS(train_config_from_json(json{{"lamda", 0.1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(json{{"warmup_batches", 20}, {"total_batches", 10}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(json{{"tau", 0.0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(json{{"context_mode", "some"}}), ConfigError);
}
