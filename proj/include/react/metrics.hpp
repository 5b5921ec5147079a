#pragma once

#include "react/data.hpp"
#include "react/inference.hpp"
#include "react/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace react {

// Mann-Whitney AUROC, ties counted as 1/2. nullopt unless both classes occur.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision over distinct score thresholds. nullopt without positives.
std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels);

struct ClassificationMetrics {
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::vector<std::size_t> skipped_classes;  // absent from labels (or without negatives)
};

// probs is n x C. C == 2 uses the class-1 column directly; C > 2 macro-averages
// one-vs-rest over the classes present.
ClassificationMetrics multiclass_metrics(const Matrix& probs, std::span<const int> labels);

// Pools every step prediction of every record (matched to instances by id).
ClassificationMetrics pooled_metrics(std::span<const TrajectoryRecord> records, std::span<const Instance> instances);

}  // namespace react
