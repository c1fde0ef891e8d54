#pragma once

// Core domain records shared across the library: impressions, query groups,
// generator configuration and per-position CTR curves.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace posgrad {

inline constexpr std::size_t kFeatureDim = 32;
inline constexpr const char* kVersion = "0.1.0";

// One side (user or item) of the feature space: 32 reals in [0, 1].
using FeatureVector = std::array<double, kFeatureDim>;

inline void validate_features(const FeatureVector& f, const char* what) {
  for (double v : f) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(what) +
                                  " feature out of [0,1]: " + std::to_string(v));
    }
  }
}

enum class Traffic { RS, Random };

inline const char* to_string(Traffic t) {
  return t == Traffic::RS ? "RS" : "RANDOM";
}

inline bool parse_traffic(const std::string& text, Traffic& out) {
  if (text == "RS") {
    out = Traffic::RS;
    return true;
  }
  if (text == "RANDOM") {
    out = Traffic::Random;
    return true;
  }
  return false;
}

// One logged impression: the atomic training / evaluation record.
// true_pctr is the synthetic label probability, kept for diagnostics only.
struct Exposure {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  FeatureVector user_features{};
  FeatureVector item_features{};
  int position = 0;
  int label = 0;
  Traffic traffic = Traffic::RS;
  double true_pctr = 0.0;

  bool operator==(const Exposure&) const = default;
};

// One user request: exactly K exposures whose positions form a permutation
// of {0..K-1} and which share user id and traffic tag.
struct QueryGroup {
  std::int64_t user_id = 0;
  std::vector<Exposure> exposures;

  bool operator==(const QueryGroup&) const = default;
};

inline void validate_group(const QueryGroup& g) {
  const std::size_t k = g.exposures.size();
  if (k < 2) throw std::invalid_argument("query group needs at least 2 exposures");
  std::vector<char> seen(k, 0);
  for (const Exposure& e : g.exposures) {
    if (e.user_id != g.user_id) throw std::invalid_argument("exposure user_id differs from group");
    if (e.traffic != g.exposures.front().traffic)
      throw std::invalid_argument("mixed traffic tags within a group");
    if (e.position < 0 || static_cast<std::size_t>(e.position) >= k)
      throw std::invalid_argument("position " + std::to_string(e.position) +
                                  " outside [0," + std::to_string(k - 1) + "]");
    if (seen[static_cast<std::size_t>(e.position)]++)
      throw std::invalid_argument("duplicate position " + std::to_string(e.position));
    if (e.label != 0 && e.label != 1) throw std::invalid_argument("label must be 0 or 1");
    if (!(e.true_pctr >= 0.0 && e.true_pctr <= 1.0))
      throw std::invalid_argument("true_pctr outside [0,1]");
  }
}

struct GenConfig {
  std::size_t n_users = 50000;
  int items_per_query = 10;  // K
  double noise_scale = 1.0;
  std::uint64_t master_seed = 1;
  Traffic traffic_mode = Traffic::RS;
  // The ranking pass and the labeling pass reuse one noise draw per exposure
  // by default; set to redraw the noise after positions are assigned.
  bool resample_noise = false;

  void validate() const {
    if (items_per_query < 2) throw std::invalid_argument("items_per_query must be >= 2");
    if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
    if (noise_scale < 0.0) throw std::invalid_argument("noise_scale must be >= 0");
  }
};

// Per-position mean CTR with sample counts. counts[k] == 0 marks an empty
// position; its value carries no information.
struct PositionCurve {
  std::vector<double> values;
  std::vector<std::int64_t> counts;

  PositionCurve() = default;
  explicit PositionCurve(std::size_t k) : values(k, 0.0), counts(k, 0) {}

  std::size_t size() const { return values.size(); }
  bool empty_at(std::size_t k) const { return counts[k] == 0; }
  bool has_empty() const {
    for (auto c : counts)
      if (c == 0) return true;
    return false;
  }

  bool operator==(const PositionCurve&) const = default;
};

inline void require_same_k(const PositionCurve& a, const PositionCurve& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("position curves have different lengths: " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

// Flatten query groups into a single exposure list (order preserved).
inline std::vector<Exposure> flatten(const std::vector<QueryGroup>& groups) {
  std::vector<Exposure> out;
  std::size_t total = 0;
  for (const auto& g : groups) total += g.exposures.size();
  out.reserve(total);
  for (const auto& g : groups)
    for (const auto& e : g.exposures) out.push_back(e);
  return out;
}

}  // namespace posgrad
