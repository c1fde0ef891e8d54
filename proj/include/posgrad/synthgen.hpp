#pragma once

// Synthetic click-log generator with controllable position bias (baked into
// the scoring formula) and ranking bias (items sorted by score).
//
// Per user: draw K fresh items with uniform(0,1) features and one noise draw
// per exposure, score everything at position 0, assign positions (RS: rank of
// the position-0 score, descending, ties by ascending item id; RANDOM: a
// uniform permutation), rescore at the final position reusing the same noise,
// clamp the score into [0,1] and draw the click label from it.
//
// Determinism: user u draws from SplitMix64(mix_seed(master_seed, u)) in a
// fixed order (user features, then per item: item features then noise, then
// the permutation in RANDOM mode, then labels), so generation is independent
// of scheduling and reproducible across runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "posgrad/data.hpp"
#include "posgrad/rng.hpp"

namespace posgrad {

// Click-probability score before clamping. Position enters twice: a linear
// -0.1*p decay and a 0.1*cos(...) user-position interaction, on top of
// user, item, user-item and pairwise-difference terms.
inline double score_formula(const FeatureVector& user, const FeatureVector& item,
                            int position, double noise) {
  double sum_user = 0.0, sum_item = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    sum_user += user[i];
    sum_item += item[i];
  }
  // Alternating pairwise differences over the concatenated 64-dim vector.
  double alt = 0.0;
  for (std::size_t i = 0; i + 1 < kFeatureDim; i += 2) {
    alt += user[i] - user[i + 1];
    alt += item[i] - item[i + 1];
  }
  double cross = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    cross += std::sin(10.0 * user[i] + 10.0 * item[i]);
  }
  double user_half = 0.0;
  for (std::size_t i = 0; i < kFeatureDim / 2; ++i) {
    user_half += user[i] - user[i + kFeatureDim / 2];
  }
  const double p = static_cast<double>(position);
  const double exponent = std::sin(sum_user) + std::sin(sum_item) + std::cos(alt) +
                          0.01 * cross - 0.1 * p + 0.1 * std::cos(user_half + p) +
                          0.1 * noise - 3.0;
  return std::exp(exponent);
}

namespace detail {

inline QueryGroup generate_group(const GenConfig& cfg, std::int64_t user_id) {
  const int k = cfg.items_per_query;
  SplitMix64 rng(mix_seed(cfg.master_seed, static_cast<std::uint64_t>(user_id)));

  FeatureVector user;
  for (double& v : user) v = rng.next_double();

  std::vector<FeatureVector> items(static_cast<std::size_t>(k));
  std::vector<double> noise(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    for (double& v : items[static_cast<std::size_t>(j)]) v = rng.next_double();
    noise[static_cast<std::size_t>(j)] =
        rng.next_uniform(-cfg.noise_scale, cfg.noise_scale);
  }

  // Step 1: score every exposure at the top position.
  std::vector<double> step1(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    step1[static_cast<std::size_t>(j)] =
        score_formula(user, items[static_cast<std::size_t>(j)], 0,
                      noise[static_cast<std::size_t>(j)]);
  }

  // Step 2: assign positions.
  std::vector<int> position(static_cast<std::size_t>(k));
  if (cfg.traffic_mode == Traffic::RS) {
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = step1[static_cast<std::size_t>(a)];
      const double sb = step1[static_cast<std::size_t>(b)];
      if (sa != sb) return sa > sb;
      return a < b;  // item ids ascend with the draw index
    });
    for (int rank = 0; rank < k; ++rank)
      position[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = rank;
  } else {
    std::iota(position.begin(), position.end(), 0);
    rng.shuffle(position.begin(), position.end());
  }

  if (cfg.resample_noise) {
    for (double& s : noise) s = rng.next_uniform(-cfg.noise_scale, cfg.noise_scale);
  }

  QueryGroup group;
  group.user_id = user_id;
  group.exposures.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    Exposure& e = group.exposures[static_cast<std::size_t>(j)];
    e.user_id = user_id;
    e.item_id = user_id * k + j;
    e.user_features = user;
    e.item_features = items[static_cast<std::size_t>(j)];
    e.position = position[static_cast<std::size_t>(j)];
    e.traffic = cfg.traffic_mode;
    const double score = score_formula(user, items[static_cast<std::size_t>(j)],
                                       e.position, noise[static_cast<std::size_t>(j)]);
    e.true_pctr = std::clamp(score, 0.0, 1.0);
    e.label = rng.next_bernoulli(e.true_pctr) ? 1 : 0;
  }
  return group;
}

}  // namespace detail

inline std::vector<QueryGroup> generate(const GenConfig& cfg) {
  cfg.validate();
  std::vector<QueryGroup> groups;
  groups.reserve(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    groups.push_back(detail::generate_group(cfg, static_cast<std::int64_t>(u)));
  }
  return groups;
}

}  // namespace posgrad
