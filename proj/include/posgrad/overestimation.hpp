#pragma once

// The two analytical studies: the linear two-item overestimation example
// (the table behind `repro-table1`) and the L2-regularization sweep.
//
// The linear example: two items, v_a = [0.1]*10 shown at position 0 and
// v_b = [-0.1]*10 at position 1 (a ranking-biased placement). CTRs follow
// logistic(sum_i w_i v_i + w_0 p). The ground-truth weights (w_0 = -1,
// w_i = 1) incur zero empirical loss but pay more L2 than the
// gradient-overestimating weights (w_0 = -1.1, w_i = 0.9), which reproduce
// both CTRs almost exactly on this placement:
//   item a: logistic(0.9)  = 0.710950 vs logistic(1)  = 0.731059
//   item b: logistic(-2.0) = 0.119203 vs logistic(-2) exactly
// so loss_emp = (0.731059 - 0.710950)^2 ~= 0.000404, and the regularizer
// prefers the distorted weights: 0.0097 < 0.0110 total. Empirical loss is a
// sum over the two exposures (a mean would halve 0.0004 away).

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "posgrad/data.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"
#include "posgrad/nnet.hpp"
#include "posgrad/splits.hpp"
#include "posgrad/synthgen.hpp"

namespace posgrad {

inline constexpr double kLinearExampleL2 = 0.001;
inline constexpr std::size_t kLinearFeatures = 10;

// weights[0] multiplies the position; weights[1..10] the features.
using LinearWeights = std::array<double, kLinearFeatures + 1>;

struct LinearExposure {
  std::array<double, kLinearFeatures> features;
  int position = 0;
};

inline double linear_pctr(const LinearWeights& w, const LinearExposure& e) {
  double z = w[0] * static_cast<double>(e.position);
  for (std::size_t i = 0; i < kLinearFeatures; ++i) z += w[i + 1] * e.features[i];
  return logistic(z);
}

inline std::vector<LinearExposure> table1_exposures() {
  LinearExposure a, b;
  a.features.fill(0.1);
  a.position = 0;
  b.features.fill(-0.1);
  b.position = 1;
  return {a, b};
}

struct LinearLosses {
  double loss_emp = 0.0;  // sum of squared CTR gaps over the exposures
  double loss_reg = 0.0;  // 0.001 * sum of squared weights, position included
  double total = 0.0;
};

inline LinearLosses linear_example_losses(const LinearWeights& model_weights,
                                          const LinearWeights& ground_truth_weights,
                                          std::span<const LinearExposure> exposures) {
  LinearLosses out;
  for (const LinearExposure& e : exposures) {
    const double gap = linear_pctr(ground_truth_weights, e) - linear_pctr(model_weights, e);
    out.loss_emp += gap * gap;
  }
  for (const double w : model_weights) out.loss_reg += kLinearExampleL2 * w * w;
  out.total = out.loss_emp + out.loss_reg;
  return out;
}

inline LinearLosses linear_example_losses(const LinearWeights& model_weights,
                                          const LinearWeights& ground_truth_weights) {
  const std::vector<LinearExposure> exposures = table1_exposures();
  return linear_example_losses(model_weights, ground_truth_weights, exposures);
}

struct Table1 {
  LinearWeights ground_truth_weights, overestimation_weights;
  LinearLosses ground_truth, overestimation;
};

inline Table1 repro_table1() {
  Table1 t;
  t.ground_truth_weights.fill(1.0);
  t.ground_truth_weights[0] = -1.0;
  t.overestimation_weights.fill(0.9);
  t.overestimation_weights[0] = -1.1;
  t.ground_truth = linear_example_losses(t.ground_truth_weights, t.ground_truth_weights);
  t.overestimation = linear_example_losses(t.overestimation_weights, t.ground_truth_weights);
  return t;
}

// L2 sweep: how the overestimation ratio of an ST_PSF model responds to the
// regularization strength. Datasets are generated once per seed and reused
// across lambdas; the ground-truth curve is the empirical click curve of the
// full random-traffic pool.
struct L2SweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

struct L2SweepResult {
  std::vector<double> lambdas;
  std::vector<double> mean_ratios;  // parallel to lambdas, averaged over seeds
  std::vector<L2SweepRow> rows;     // lambda-major, then seed order
};

inline L2SweepResult l2_sweep(std::span<const double> lambdas, const GenConfig& gen_cfg,
                              std::size_t random_users, const TrainConfig& train_cfg,
                              std::span<const std::uint64_t> seeds) {
  if (lambdas.empty()) throw std::invalid_argument("l2_sweep: empty lambda list");
  if (seeds.empty()) throw std::invalid_argument("l2_sweep: empty seed list");
  for (double l : lambdas) {
    if (l < 0.0) throw std::invalid_argument("l2_sweep: lambda must be >= 0");
  }
  const int k = gen_cfg.items_per_query;

  L2SweepResult out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  out.rows.resize(lambdas.size() * seeds.size());

  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const std::uint64_t seed = seeds[si];
    GenConfig rs = gen_cfg;
    rs.traffic_mode = Traffic::RS;
    rs.master_seed = seed;
    GenConfig rnd = gen_cfg;
    rnd.traffic_mode = Traffic::Random;
    rnd.n_users = random_users;
    rnd.master_seed = random_traffic_seed(seed);

    const std::vector<Exposure> rs_data = flatten(generate(rs));
    const std::vector<Exposure> rnd_data = flatten(generate(rnd));
    const RsSplits splits = split_rs(rs_data, k);
    const PositionCurve gt = empirical_curve(rnd_data, static_cast<std::size_t>(k));

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      TrainConfig tc = train_cfg;
      tc.l2_coeff = lambdas[li];
      tc.seed = model_train_seed(seed);
      const TrainedModel model = train(ModelKind::st_psf(), splits.train, splits.validation,
                                       k, tc);
      const double ratio = overestimation_ratio(serve_curve(model, rnd_data), gt);
      out.rows[li * seeds.size() + si] = {lambdas[li], seed, ratio};
    }
  }
  out.mean_ratios.resize(lambdas.size());
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    double sum = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      sum += out.rows[li * seeds.size() + si].ratio;
    }
    out.mean_ratios[li] = sum / static_cast<double>(seeds.size());
  }
  return out;
}

}  // namespace posgrad
