#pragma once

#include "react/model.hpp"
#include "react/objective.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>

namespace react {

struct TrainConfig {
  double lambda = 1e-3;
  double tau = gating::kDefaultTemperature;
  std::size_t batch_size = 64;
  std::size_t total_batches = 1000;
  std::size_t warmup_batches = 50;
  std::size_t K_candidates = 1000;
  double lr_pretrain = 1e-3;
  double lr_policy = 1e-3;
  double lr_predictor_joint = 1e-4;
  double dropout_rate = 0.4;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;
  std::size_t max_pretrain_epochs = 200;
  std::size_t pretrain_batch_size = 64;
  // Validation AUROC is computed every log_interval iterations (0: never).
  std::size_t log_interval = 50;
  ContextMode context_mode = ContextMode::learned;
  std::array<double, 3> split_fractions{0.64, 0.16, 0.20};
  bool standardize = true;
  Architecture arch;

  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig load_train_config(const std::filesystem::path& path);

const char* to_string(ContextMode m);
ContextMode context_mode_from_string(const std::string& s);

}  // namespace react
