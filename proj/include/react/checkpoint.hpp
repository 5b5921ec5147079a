#pragma once

#include "react/config.hpp"
#include "react/data.hpp"
#include "react/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace react {

// Self-describing JSON checkpoint: dimensions, layer shapes, flat parameter
// arrays (row-major), temperature, the dataset manifest (costs, names,
// standardization) and the training config snapshot. Doubles are written in
// shortest round-trip form, so reloading is bitwise exact.
struct Checkpoint {
  Models models;
  DatasetManifest manifest;
  TrainConfig config;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace react
