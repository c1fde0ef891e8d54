#pragma once

// Offline metrics: rank-based AUC, per-position CTR curves, relative curves,
// estimation error against a ground-truth curve, the overestimation ratio
// and the empirical position gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "posgrad/data.hpp"

namespace posgrad {

// Probability that a uniformly random positive outranks a uniformly random
// negative; tied scores count one half. Sort-and-rank, O(n log n).
inline double auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    throw std::invalid_argument("auc: labels and scores differ in length");
  const std::size_t n = labels.size();
  std::int64_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    n_pos += y;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: need at least one positive and one negative label");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average rank within tied runs, accumulate ranks of positives.
  double pos_rank_sum = 0.0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    const double avg_rank = 0.5 * static_cast<double>(start + 1 + end);  // 1-based
    for (std::size_t i = start; i < end; ++i) {
      if (labels[order[i]] == 1) pos_rank_sum += avg_rank;
    }
    start = end;
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

inline double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  return auc(std::span<const int>(labels), std::span<const double>(scores));
}

// Mean label per position with counts. Positions with no exposures stay
// flagged empty (count 0).
inline PositionCurve empirical_curve(std::span<const Exposure> exposures, std::size_t k) {
  if (exposures.empty()) throw std::invalid_argument("empirical_curve: empty exposure set");
  PositionCurve curve(k);
  for (const Exposure& e : exposures) {
    if (e.position < 0 || static_cast<std::size_t>(e.position) >= k)
      throw std::invalid_argument("empirical_curve: position out of range");
    curve.values[static_cast<std::size_t>(e.position)] += e.label;
    curve.counts[static_cast<std::size_t>(e.position)] += 1;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (curve.counts[i] > 0) curve.values[i] /= static_cast<double>(curve.counts[i]);
  }
  return curve;
}

// Mean of arbitrary per-exposure values grouped by position.
inline PositionCurve value_curve(std::span<const Exposure> exposures,
                                 std::span<const double> values, std::size_t k) {
  if (exposures.size() != values.size())
    throw std::invalid_argument("value_curve: size mismatch");
  if (exposures.empty()) throw std::invalid_argument("value_curve: empty exposure set");
  PositionCurve curve(k);
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    const auto p = static_cast<std::size_t>(exposures[i].position);
    if (p >= k) throw std::invalid_argument("value_curve: position out of range");
    curve.values[p] += values[i];
    curve.counts[p] += 1;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (curve.counts[i] > 0) curve.values[i] /= static_cast<double>(curve.counts[i]);
  }
  return curve;
}

// Curve normalized by its first entry, so entry 0 is 1 by construction.
inline std::vector<double> relative_curve(const PositionCurve& curve) {
  if (curve.size() == 0) throw std::invalid_argument("relative_curve: empty curve");
  if (curve.empty_at(0) || curve.values[0] <= 0.0)
    throw std::invalid_argument("relative_curve: first position has no positive CTR");
  std::vector<double> rel(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) rel[i] = curve.values[i] / curve.values[0];
  return rel;
}

struct EstimationError {
  double sum_sq = 0.0;
  double max_abs = 0.0;
};

// Gap between a model's relative curve and the ground-truth relative curve.
inline EstimationError estimation_error(std::span<const double> model_rel,
                                        std::span<const double> gt_rel) {
  if (model_rel.size() != gt_rel.size())
    throw std::invalid_argument("estimation_error: length mismatch");
  EstimationError err;
  for (std::size_t i = 0; i < model_rel.size(); ++i) {
    const double d = model_rel[i] - gt_rel[i];
    err.sum_sq += d * d;
    err.max_abs = std::max(err.max_abs, std::abs(d));
  }
  return err;
}

// (max/min of the model curve) over (max/min of the ground-truth curve).
// Above 1 means the model exaggerates position sensitivity.
inline double overestimation_ratio(const PositionCurve& model_curve,
                                   const PositionCurve& gt_curve) {
  require_same_k(model_curve, gt_curve);
  auto max_over_min = [](const PositionCurve& c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.empty_at(i) || c.values[i] <= 0.0)
        throw std::invalid_argument("overestimation_ratio: empty or non-positive entry");
      lo = std::min(lo, c.values[i]);
      hi = std::max(hi, c.values[i]);
    }
    return hi / lo;
  };
  return max_over_min(model_curve) / max_over_min(gt_curve);
}

// One model evaluation bundle; houses everything the offline reports emit.
struct MetricsReport {
  double auc = 0.0;
  PositionCurve curve;                 // mean predicted CTR per position
  std::vector<double> relative_curve;  // curve / curve[0]
  double estimation_error_sq = 0.0;
  double estimation_error_maxabs = 0.0;
  double overestimation_ratio = 0.0;
  double position_gradient = 0.0;
};

}  // namespace posgrad
