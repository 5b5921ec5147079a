#include "react/metrics.hpp"

#include "react/errors.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace react {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InputError("metric: scores/labels length mismatch");
}

// Indices sorted by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks (1-based) of positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) {
        rank_sum += midrank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::size_t total_pos = 0;
  for (int y : labels)
    if (y != 0) ++total_pos;
  if (total_pos == 0) return std::nullopt;
  const auto order = descending(scores);
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] != 0) ++tp;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

ClassificationMetrics multiclass_metrics(const Matrix& probs, std::span<const int> labels) {
  const Eigen::Index C = probs.cols();
  if (C < 2) throw InputError("metrics: need at least two classes");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw InputError("metrics: row/label count mismatch");
  ClassificationMetrics out;
  std::vector<double> scores(labels.size());
  std::vector<int> bin(labels.size());
  auto column = [&](Eigen::Index c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probs(static_cast<Eigen::Index>(i), c);
      bin[i] = labels[i] == c ? 1 : 0;
    }
  };
  if (C == 2) {
    column(1);
    out.auroc = auroc(scores, bin);
    out.auprc = auprc(scores, bin);
    return out;
  }
  double roc_sum = 0.0, pr_sum = 0.0;
  std::size_t roc_n = 0, pr_n = 0;
  for (Eigen::Index c = 0; c < C; ++c) {
    column(c);
    const auto roc = auroc(scores, bin);
    const auto pr = auprc(scores, bin);
    if (!roc) out.skipped_classes.push_back(static_cast<std::size_t>(c));
    if (roc) {
      roc_sum += *roc;
      ++roc_n;
    }
    if (pr && roc) {
      pr_sum += *pr;
      ++pr_n;
    }
  }
  if (roc_n > 0) out.auroc = roc_sum / static_cast<double>(roc_n);
  if (pr_n > 0) out.auprc = pr_sum / static_cast<double>(pr_n);
  return out;
}

ClassificationMetrics pooled_metrics(std::span<const TrajectoryRecord> records, std::span<const Instance> instances) {
  std::unordered_map<std::string, const Instance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.id, &inst);
  std::size_t rows = 0;
  Eigen::Index C = 0;
  for (const auto& r : records) {
    rows += r.steps.size();
    if (!r.steps.empty()) C = r.steps.front().prediction.size();
  }
  if (rows == 0) return {};
  Matrix probs(static_cast<Eigen::Index>(rows), C);
  std::vector<int> labels;
  labels.reserve(rows);
  Eigen::Index row = 0;
  for (const auto& r : records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) throw DataError("metrics: record id '" + r.id + "' not found in dataset");
    for (const auto& s : r.steps) {
      if (s.t < 1 || s.t > it->second->labels.size()) throw DataError("metrics: step index out of range for '" + r.id + "'");
      if (s.prediction.size() != C) throw DataError("metrics: inconsistent class count");
      probs.row(row++) = s.prediction.transpose();
      labels.push_back(it->second->labels[s.t - 1]);
    }
  }
  return multiclass_metrics(probs, labels);
}

}  // namespace react
