#include "react/config.hpp"

#include "react/errors.hpp"

#include <fstream>

namespace react {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("config: lambda must be nonnegative");
  if (!(tau > 0.0)) throw ConfigError("config: tau must be positive");
  if (batch_size == 0 || pretrain_batch_size == 0) throw ConfigError("config: batch sizes must be positive");
  if (warmup_batches > total_batches) throw ConfigError("config: warmup_batches > total_batches");
  if (K_candidates == 0) throw ConfigError("config: K_candidates must be >= 1");
  if (!(lr_pretrain > 0.0 && lr_policy > 0.0 && lr_predictor_joint > 0.0))
    throw ConfigError("config: learning rates must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("config: dropout_rate must lie in [0,1)");
  if (early_stop_patience == 0) throw ConfigError("config: early_stop_patience must be >= 1");
  for (double f : split_fractions)
    if (!(f > 0.0)) throw ConfigError("config: split fractions must be positive");
  if (arch.time_embedding_dim % 2 != 0) throw ConfigError("config: time_embedding_dim must be even");
  if (arch.planner_hidden.empty() || arch.predictor_hidden.empty())
    throw ConfigError("config: hidden layer lists must be nonempty");
}

const char* to_string(ContextMode m) {
  switch (m) {
    case ContextMode::learned: return "learned";
    case ContextMode::all: return "all";
    case ContextMode::none: return "none";
  }
  return "learned";
}

ContextMode context_mode_from_string(const std::string& s) {
  if (s == "learned") return ContextMode::learned;
  if (s == "all") return ContextMode::all;
  if (s == "none") return ContextMode::none;
  throw ConfigError("config: context_mode must be learned|all|none, got '" + s + "'");
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a flat JSON object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "total_batches") c.total_batches = v.get<std::size_t>();
      else if (key == "warmup_batches") c.warmup_batches = v.get<std::size_t>();
      else if (key == "K_candidates") c.K_candidates = v.get<std::size_t>();
      else if (key == "lr_pretrain") c.lr_pretrain = v.get<double>();
      else if (key == "lr_policy") c.lr_policy = v.get<double>();
      else if (key == "lr_predictor_joint") c.lr_predictor_joint = v.get<double>();
      else if (key == "dropout_rate") c.dropout_rate = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "early_stop_patience") c.early_stop_patience = v.get<std::size_t>();
      else if (key == "max_pretrain_epochs") c.max_pretrain_epochs = v.get<std::size_t>();
      else if (key == "pretrain_batch_size") c.pretrain_batch_size = v.get<std::size_t>();
      else if (key == "log_interval") c.log_interval = v.get<std::size_t>();
      else if (key == "context_mode") c.context_mode = context_mode_from_string(v.get<std::string>());
      else if (key == "split_fractions") c.split_fractions = v.get<std::array<double, 3>>();
      else if (key == "standardize") c.standardize = v.get<bool>();
      else if (key == "planner_hidden") c.arch.planner_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "predictor_hidden") c.arch.predictor_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "time_embedding_dim") c.arch.time_embedding_dim = v.get<std::size_t>();
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"tau", c.tau},
          {"batch_size", c.batch_size},
          {"total_batches", c.total_batches},
          {"warmup_batches", c.warmup_batches},
          {"K_candidates", c.K_candidates},
          {"lr_pretrain", c.lr_pretrain},
          {"lr_policy", c.lr_policy},
          {"lr_predictor_joint", c.lr_predictor_joint},
          {"dropout_rate", c.dropout_rate},
          {"seed", c.seed},
          {"early_stop_patience", c.early_stop_patience},
          {"max_pretrain_epochs", c.max_pretrain_epochs},
          {"pretrain_batch_size", c.pretrain_batch_size},
          {"log_interval", c.log_interval},
          {"context_mode", to_string(c.context_mode)},
          {"split_fractions", c.split_fractions},
          {"standardize", c.standardize},
          {"planner_hidden", c.arch.planner_hidden},
          {"predictor_hidden", c.arch.predictor_hidden},
          {"time_embedding_dim", c.arch.time_embedding_dim}};
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace react
