#pragma once

// Experiment scaffolding shared by the sweep and the pipeline: seed
// derivation for the separate traffic pools, and by-user splits over
// flattened exposure lists.
//
// Random traffic gets its own master seed so its users are disjoint from the
// ranked pool (sharing a master would hand the test set the training users'
// features verbatim). Splits cut on user boundaries to keep a query group
// intact on one side.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "posgrad/data.hpp"
#include "posgrad/rng.hpp"

namespace posgrad {

inline std::uint64_t random_traffic_seed(std::uint64_t experiment_seed) {
  return mix_seed(experiment_seed, 0x52414E44);  // "RAND"
}

inline std::uint64_t model_train_seed(std::uint64_t experiment_seed) {
  return mix_seed(experiment_seed, 0x545249);  // "TRI"
}

namespace detail {

// Flattened generator output holds each user's K exposures contiguously.
inline std::size_t user_block_count(std::span<const Exposure> exposures, int k) {
  if (k < 1) throw std::invalid_argument("split: K must be >= 1");
  const std::size_t ku = static_cast<std::size_t>(k);
  if (exposures.empty() || exposures.size() % ku != 0)
    throw std::invalid_argument("split: exposure count is not a whole number of user groups");
  const std::size_t n_users = exposures.size() / ku;
  for (std::size_t u = 0; u < n_users; ++u) {
    const std::int64_t uid = exposures[u * ku].user_id;
    for (std::size_t j = 1; j < ku; ++j) {
      if (exposures[u * ku + j].user_id != uid)
        throw std::invalid_argument("split: exposures are not grouped by user at block " +
                                    std::to_string(u));
    }
  }
  return n_users;
}

}  // namespace detail

// Ranked traffic: 80% of users train, next 10% early-stopping validation,
// final 10% left untouched.
struct RsSplits {
  std::span<const Exposure> train, validation, held_out;
};

inline RsSplits split_rs(std::span<const Exposure> exposures, int k) {
  const std::size_t n_users = detail::user_block_count(exposures, k);
  const std::size_t ku = static_cast<std::size_t>(k);
  const std::size_t train_users = n_users * 8 / 10;
  const std::size_t val_users = n_users * 9 / 10 - train_users;
  if (train_users == 0 || val_users == 0)
    throw std::invalid_argument("split_rs: too few users to form train and validation sets");
  RsSplits s;
  s.train = exposures.subspan(0, train_users * ku);
  s.validation = exposures.subspan(train_users * ku, val_users * ku);
  s.held_out = exposures.subspan((train_users + val_users) * ku);
  return s;
}

// Random traffic: first half of users fits the fusing weight, second half is
// the final test set.
struct RandomSplits {
  std::span<const Exposure> fit, test;
};

inline RandomSplits split_random(std::span<const Exposure> exposures, int k) {
  const std::size_t n_users = detail::user_block_count(exposures, k);
  const std::size_t ku = static_cast<std::size_t>(k);
  const std::size_t fit_users = n_users / 2;
  if (fit_users == 0 || fit_users == n_users)
    throw std::invalid_argument("split_random: too few users to form fit and test sets");
  RandomSplits s;
  s.fit = exposures.subspan(0, fit_users * ku);
  s.test = exposures.subspan(fit_users * ku);
  return s;
}

}  // namespace posgrad
