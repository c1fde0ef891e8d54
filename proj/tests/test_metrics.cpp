#include <cmath>
#include <stdexcept>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "posgrad/data.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"

using namespace posgrad;

namespace {

Exposure at_position(int position, int label) {
  Exposure e;
  e.user_id = 0;
  e.item_id = position;
  e.user_features.fill(0.0);
  e.item_features.fill(0.0);
  e.position = position;
  e.label = label;
  e.traffic = Traffic::Random;
  e.true_pctr = 0.5;
  return e;
}

// ST_PSF model with zero main net and tower logit -0.1 * position.
TrainedModel ramp_tower_model(int k) {
  TrainedModel m;
  m.kind = ModelKind::st_psf();
  m.k = k;
  m.main_net = MlpParams::zeros({2 * kFeatureDim, 1});
  MlpParams tower = MlpParams::zeros({static_cast<std::size_t>(k), 1});
  for (int p = 0; p < k; ++p)
    tower.layers[0].weights.at(0, static_cast<std::size_t>(p)) = -0.1 * p;
  m.position_tower = tower;
  m.config_fingerprint = "test";
  return m;
}

}  // namespace

TEST_CASE("auc agrees with pair enumeration") {
  const std::vector<int> labels{1, 0, 1, 0};
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.6};
  CHECK(auc(labels, scores) == Catch::Approx(0.75).epsilon(1e-15));

  SECTION("perfect and reversed rankings") {
    const std::vector<int> l{0, 0, 1, 1};
    const std::vector<double> perfect{0.1, 0.2, 0.8, 0.9};
    const std::vector<double> reversed{0.9, 0.8, 0.2, 0.1};
    CHECK(auc(l, perfect) == 1.0);
    CHECK(auc(l, reversed) == 0.0);
  }
  SECTION("ties count half") {
    const std::vector<int> l{1, 0};
    const std::vector<double> tied{0.5, 0.5};
    CHECK(auc(l, tied) == 0.5);
  }
  SECTION("single-class input is rejected") {
    const std::vector<int> l{1, 1};
    const std::vector<double> s{0.1, 0.2};
    CHECK_THROWS_AS(auc(l, s), std::invalid_argument);
  }
  SECTION("invariant under strictly increasing transforms") {
    std::vector<double> exp_scores(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) exp_scores[i] = std::exp(3.0 * scores[i]);
    CHECK(auc(labels, exp_scores) == auc(labels, scores));
  }
  SECTION("complement under score negation") {
    std::vector<double> neg(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i];
    CHECK(auc(labels, neg) == Catch::Approx(1.0 - auc(labels, scores)).epsilon(1e-15));
  }
}

TEST_CASE("empirical_curve averages labels per position") {
  std::vector<Exposure> data;
  data.push_back(at_position(0, 1));
  data.push_back(at_position(0, 1));
  data.push_back(at_position(1, 1));
  data.push_back(at_position(1, 0));
  const PositionCurve c = empirical_curve(data, 3);
  CHECK(c.values[0] == 1.0);
  CHECK(c.values[1] == 0.5);
  CHECK(c.counts[0] == 2);
  CHECK(c.counts[1] == 2);
  CHECK(c.counts[2] == 0);
  CHECK(c.empty_at(2));
  CHECK(c.counts[0] + c.counts[1] + c.counts[2] == static_cast<std::int64_t>(data.size()));
}

TEST_CASE("relative_curve divides by the first entry") {
  PositionCurve c(2);
  c.values = {0.2, 0.1};
  c.counts = {1, 1};
  const std::vector<double> rel = relative_curve(c);
  CHECK(rel[0] == 1.0);
  CHECK(rel[1] == 0.5);

  SECTION("scale invariance") {
    PositionCurve scaled = c;
    for (double& v : scaled.values) v *= 3.0;
    CHECK(relative_curve(scaled) == rel);
  }
  SECTION("zero first entry is rejected") {
    c.values[0] = 0.0;
    CHECK_THROWS_AS(relative_curve(c), std::invalid_argument);
  }
}

TEST_CASE("estimation_error reports sum of squares and max abs") {
  const std::vector<double> model{1.0, 0.5};
  const std::vector<double> gt{1.0, 0.7};
  const EstimationError e = estimation_error(model, gt);
  CHECK(e.sum_sq == Catch::Approx(0.04).epsilon(1e-12));
  CHECK(e.max_abs == Catch::Approx(0.2).epsilon(1e-12));

  CHECK(estimation_error(gt, gt).sum_sq == 0.0);
  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(estimation_error(model, shorter), std::invalid_argument);
}

TEST_CASE("overestimation_ratio compares curve spreads") {
  PositionCurve model(2), gt(2);
  model.values = {0.5, 0.1};  // max/min = 5
  model.counts = {1, 1};
  gt.values = {0.4, 0.2};  // max/min = 2
  gt.counts = {1, 1};
  CHECK(overestimation_ratio(model, gt) == Catch::Approx(2.5).epsilon(1e-12));
  CHECK(overestimation_ratio(gt, gt) == 1.0);

  SECTION("zero or empty entries are rejected") {
    model.values[1] = 0.0;
    CHECK_THROWS_AS(overestimation_ratio(model, gt), std::invalid_argument);
    model.values[1] = 0.1;
    model.counts[1] = 0;
    CHECK_THROWS_AS(overestimation_ratio(model, gt), std::invalid_argument);
  }
}

TEST_CASE("value_curve averages predictions per position") {
  std::vector<Exposure> data{at_position(0, 0), at_position(0, 0), at_position(1, 0)};
  const std::vector<double> preds{0.2, 0.4, 0.9};
  const PositionCurve c = value_curve(data, preds, 2);
  CHECK(c.values[0] == Catch::Approx(0.3).epsilon(1e-15));
  CHECK(c.values[1] == Catch::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("position_gradient telescopes over the ramp tower") {
  const TrainedModel m = ramp_tower_model(10);
  std::vector<Exposure> probes{at_position(0, 0), at_position(3, 1)};
  // Mean over k of sigma(-0.1(k+1)) - sigma(-0.1k) = (sigma(-0.9) - sigma(0)) / 9.
  CHECK(position_gradient(m, probes) ==
        Catch::Approx(-0.023438833625000446).epsilon(1e-14));

  SECTION("position-unaware models report exactly zero") {
    TrainedModel base;
    base.kind = ModelKind::base();
    base.k = 10;
    base.main_net = MlpParams::zeros({2 * kFeatureDim, 1});
    base.main_net.layers[0].bias[0] = 0.73;
    base.config_fingerprint = "test";
    CHECK(position_gradient(base, probes) == 0.0);
  }
  SECTION("empty probe set is rejected") {
    const std::vector<Exposure> none;
    CHECK_THROWS_AS(position_gradient(m, none), std::invalid_argument);
  }
}
