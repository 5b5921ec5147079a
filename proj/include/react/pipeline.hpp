#pragma once

#include "react/config.hpp"
#include "react/data.hpp"
#include "react/inference.hpp"
#include "react/metrics.hpp"
#include "react/training.hpp"

#include <span>
#include <string>
#include <vector>

namespace react {

struct PreparedData {
  DatasetManifest manifest;  // carries the fitted standardization, if any
  Split split;
};

// Deterministic split (cfg.seed) and, when cfg.standardize, z-scoring with
// train-split statistics applied to all three parts.
PreparedData prepare_data(const Dataset& ds, const TrainConfig& cfg);

// Applies a manifest's stored standardization (if any) and re-derives the split.
Split resplit(const Dataset& ds, const DatasetManifest& manifest, const TrainConfig& cfg);

// Fresh models with a pretrained predictor.
Models pretrain_models(const PreparedData& data, const TrainConfig& cfg, PretrainReport* report = nullptr);

struct Evaluation {
  std::vector<TrajectoryRecord> records;
  CostSummary costs;
  ClassificationMetrics metrics;
};

Evaluation evaluate(const Models& models, std::span<const Instance> instances, const CostSpec& costs,
                    const InferenceOptions& opts = {});

struct SweepRow {
  double lambda = 0.0;
  double total_cost = 0.0;
  double temporal_cost = 0.0;
  double context_cost = 0.0;
  std::optional<double> auroc;
  std::optional<double> auprc;
  bool ok = true;
  std::string error;
};

struct SweepOptions {
  // Reuse one pretrained predictor for every lambda instead of pretraining per row.
  bool share_pretrained = true;
  // Keep the trained models and test records per row.
  bool keep_runs = false;
};

struct SweepRun {
  SweepRow row;
  std::optional<Models> models;
  std::vector<TrajectoryRecord> records;
};

// One training run per lambda, evaluated on the test split; rows sorted by
// lambda descending. A failing row is flagged and the rest continue.
std::vector<SweepRun> sweep(const PreparedData& data, std::span<const double> lambdas, const TrainConfig& base,
                            const SweepOptions& opts = {}, const Models* pretrained = nullptr);

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& r);
void write_sweep_csv(std::span<const SweepRun> runs, const std::filesystem::path& path);

}  // namespace react
