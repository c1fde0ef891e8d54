#pragma once

// Gradient interpolation: mix a position-aware model with a position-unaware
// one, p = alpha * p_aware + (1 - alpha) * p_unaware.
//
// alpha (the weight on the AWARE model) has a closed form: the least-squares
// fit of the mixture's per-position curve to the ground-truth random-traffic
// curve,
//
//   alpha = sum_k (p_g[k] - p_u[k]) (p_a[k] - p_u[k]) / sum_k (p_a[k] - p_u[k])^2
//
// clamped to [0,1]. randomization_rate = 1 - alpha is the fraction of train
// positions to randomize when the mixture is realized as a single retrained
// model instead. Positions missing from any curve are dropped from both sums
// (small unbiased slices may not cover every position).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "posgrad/data.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"

namespace posgrad {

struct FusionResult {
  double alpha = 0.0;               // weight on the position-aware model
  double randomization_rate = 1.0;  // = 1 - alpha
  double objective = 0.0;           // least-squares residual at alpha
  bool degenerate = false;          // aware curve indistinguishable from unaware
  PositionCurve p_g, p_a, p_u;      // curves the fit consumed
};

// Constant curve at the unweighted mean of p_a: the cheap stand-in for a
// position-unaware model's curve. Requires every position populated.
inline PositionCurve approx_unaware_curve(const PositionCurve& p_a) {
  const std::size_t k = p_a.values.size();
  if (k == 0) throw std::invalid_argument("approx_unaware_curve: empty curve");
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (p_a.counts[i] == 0)
      throw std::invalid_argument("approx_unaware_curve: position " + std::to_string(i) +
                                  " has no exposures");
    mean += p_a.values[i];
  }
  mean /= static_cast<double>(k);
  PositionCurve out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.values[i] = mean;
    out.counts[i] = p_a.counts[i];
  }
  return out;
}

namespace detail {

inline void require_curve_k(const PositionCurve& a, const PositionCurve& b,
                            const PositionCurve& c, const char* who) {
  if (a.values.size() != b.values.size() || a.values.size() != c.values.size())
    throw std::invalid_argument(std::string(who) + ": curves differ in K");
  if (a.values.empty()) throw std::invalid_argument(std::string(who) + ": empty curves");
}

inline bool curve_position_usable(const PositionCurve& g, const PositionCurve& a,
                                  const PositionCurve& u, std::size_t i) {
  return g.counts[i] > 0 && a.counts[i] > 0 && u.counts[i] > 0;
}

}  // namespace detail

// Least-squares objective at a given alpha, over the positions covered by
// all three curves.
inline double brute_force_objective(const PositionCurve& p_g, const PositionCurve& p_a,
                                    const PositionCurve& p_u, double alpha) {
  detail::require_curve_k(p_g, p_a, p_u, "brute_force_objective");
  double obj = 0.0;
  for (std::size_t i = 0; i < p_g.values.size(); ++i) {
    if (!detail::curve_position_usable(p_g, p_a, p_u, i)) continue;
    const double r = alpha * p_a.values[i] + (1.0 - alpha) * p_u.values[i] - p_g.values[i];
    obj += r * r;
  }
  return obj;
}

// Closed-form optimal fusing weight, clamped to [0,1]. A degenerate fit
// (p_a equals p_u everywhere it counts, so the mixture cannot move) returns
// alpha = 1 with the flag set.
inline FusionResult epsilon_closed_form(const PositionCurve& p_g, const PositionCurve& p_a,
                                        const PositionCurve& p_u) {
  detail::require_curve_k(p_g, p_a, p_u, "epsilon_closed_form");
  double num = 0.0, den = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < p_g.values.size(); ++i) {
    if (!detail::curve_position_usable(p_g, p_a, p_u, i)) continue;
    const double da = p_a.values[i] - p_u.values[i];
    num += (p_g.values[i] - p_u.values[i]) * da;
    den += da * da;
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("epsilon_closed_form: no position covered by all curves");

  FusionResult res;
  res.p_g = p_g;
  res.p_a = p_a;
  res.p_u = p_u;
  if (den == 0.0) {
    res.degenerate = true;
    res.alpha = 1.0;
  } else {
    res.alpha = std::min(1.0, std::max(0.0, num / den));
  }
  res.randomization_rate = 1.0 - res.alpha;
  res.objective = brute_force_objective(p_g, p_a, p_u, res.alpha);
  return res;
}

// Explicit two-model mixture, single exposure.
inline double mix_predict(const TrainedModel& aware, const TrainedModel& unaware,
                          double alpha, const FeatureVector& user, const FeatureVector& item,
                          int position) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("mix_predict: alpha must lie in [0,1]");
  return alpha * predict(aware, user, item, position) +
         (1.0 - alpha) * predict(unaware, user, item, position);
}

inline std::vector<double> mix_predict_batch(const TrainedModel& aware,
                                             const TrainedModel& unaware, double alpha,
                                             std::span<const Exposure> exposures,
                                             std::optional<int> position_override = std::nullopt) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("mix_predict_batch: alpha must lie in [0,1]");
  std::vector<double> p = predict_batch(aware, exposures, position_override);
  const std::vector<double> q = predict_batch(unaware, exposures, position_override);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = alpha * p[i] + (1.0 - alpha) * q[i];
  return p;
}

// Position gradient of the explicit mixture. When the unaware member is
// literally position-constant this equals alpha times the aware gradient.
inline double mix_position_gradient(const TrainedModel& aware, const TrainedModel& unaware,
                                    double alpha, std::span<const Exposure> probes) {
  if (probes.empty()) throw std::invalid_argument("mix_position_gradient: empty probe set");
  const int k = aware.k;
  if (unaware.k != k) throw std::invalid_argument("mix_position_gradient: K mismatch");
  double total = 0.0;
  std::vector<double> prev = mix_predict_batch(aware, unaware, alpha, probes, 0);
  for (int pos = 1; pos < k; ++pos) {
    std::vector<double> cur = mix_predict_batch(aware, unaware, alpha, probes, pos);
    for (std::size_t i = 0; i < probes.size(); ++i) total += cur[i] - prev[i];
    prev = std::move(cur);
  }
  return total / (static_cast<double>(probes.size()) * static_cast<double>(k - 1));
}

struct GridSearchResult {
  double alpha = 0.0;
  double auc = 0.0;
  std::vector<std::pair<double, double>> grid;  // (alpha, auc), ascending alpha
};

// Exhaustive alpha search by validation AUC over {0, step, 2*step, ..., 1};
// ties resolve to the smaller alpha.
inline GridSearchResult grid_search_alpha(const TrainedModel& aware,
                                          const TrainedModel& unaware,
                                          std::span<const Exposure> validation_set,
                                          double step) {
  if (!(step > 0.0 && step <= 1.0))
    throw std::invalid_argument("grid_search_alpha: step must lie in (0,1]");
  if (validation_set.empty())
    throw std::invalid_argument("grid_search_alpha: empty validation set");

  std::vector<int> labels(validation_set.size());
  for (std::size_t i = 0; i < validation_set.size(); ++i) labels[i] = validation_set[i].label;
  const std::vector<double> pa = predict_batch(aware, validation_set);
  const std::vector<double> pu = predict_batch(unaware, validation_set);

  std::vector<double> alphas;
  for (std::size_t i = 0;; ++i) {
    const double a = static_cast<double>(i) * step;
    if (a >= 1.0 - 1e-12) break;
    alphas.push_back(a);
  }
  alphas.push_back(1.0);

  GridSearchResult res;
  res.auc = -1.0;
  std::vector<double> mixed(validation_set.size());
  for (const double a : alphas) {
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      mixed[i] = a * pa[i] + (1.0 - a) * pu[i];
    }
    const double score = auc(std::span<const int>(labels), std::span<const double>(mixed));
    res.grid.emplace_back(a, score);
    if (score > res.auc) {
      res.auc = score;
      res.alpha = a;
    }
  }
  return res;
}

}  // namespace posgrad
