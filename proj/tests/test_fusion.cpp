#include <cmath>
#include <stdexcept>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "posgrad/data.hpp"
#include "posgrad/fusion.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"
#include "posgrad/rng.hpp"

using namespace posgrad;

namespace {

PositionCurve curve(std::vector<double> values) {
  PositionCurve c(values.size());
  c.values = std::move(values);
  for (auto& n : c.counts) n = 100;
  return c;
}

TrainedModel zero_model(ModelKind kind, int k) {
  TrainedModel m;
  m.kind = kind;
  m.k = k;
  m.main_net = MlpParams::zeros({2 * kFeatureDim, 1});
  if (kind.position_aware())
    m.position_tower = MlpParams::zeros({static_cast<std::size_t>(k), 1});
  m.config_fingerprint = "test";
  return m;
}

Exposure exposure_at(int position, int label) {
  Exposure e;
  e.user_id = 0;
  e.item_id = position;
  e.user_features.fill(0.1);
  e.item_features.fill(0.9);
  e.position = position;
  e.label = label;
  e.traffic = Traffic::Random;
  e.true_pctr = 0.5;
  return e;
}

}  // namespace

TEST_CASE("closed-form alpha reproduces the hand-derived cases") {
  const PositionCurve p_u = curve({0.2, 0.2, 0.2});
  const PositionCurve p_a = curve({0.4, 0.2, 0.0});

  SECTION("ground truth equals the aware curve: alpha 1") {
    const FusionResult r = epsilon_closed_form(p_a, p_a, p_u);
    CHECK(r.alpha == 1.0);
    CHECK(r.randomization_rate == 0.0);
    CHECK_FALSE(r.degenerate);
  }
  SECTION("ground truth equals the unaware curve: alpha 0") {
    const FusionResult r = epsilon_closed_form(p_u, p_a, p_u);
    CHECK(r.alpha == 0.0);
    CHECK(r.randomization_rate == 1.0);
  }
  SECTION("midpoint curve: alpha one half") {
    const FusionResult r = epsilon_closed_form(curve({0.3, 0.2, 0.1}), p_a, p_u);
    CHECK(r.alpha == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(r.randomization_rate == Catch::Approx(0.5).epsilon(1e-12));
  }
  SECTION("ground truth steeper than the aware curve clamps to 1") {
    const FusionResult r = epsilon_closed_form(curve({0.6, 0.2, 0.0}), p_a, p_u);
    CHECK(r.alpha == 1.0);  // unconstrained optimum lies above 1
  }
  SECTION("ground truth inverted clamps to 0") {
    const FusionResult r = epsilon_closed_form(curve({0.0, 0.2, 0.4}), p_a, p_u);
    CHECK(r.alpha == 0.0);
  }
  SECTION("aware indistinguishable from unaware is degenerate") {
    const FusionResult r = epsilon_closed_form(curve({0.3, 0.2, 0.1}), p_u, p_u);
    CHECK(r.alpha == 1.0);
    CHECK(r.degenerate);
  }
  SECTION("curve length mismatch is rejected") {
    CHECK_THROWS_AS(epsilon_closed_form(curve({0.1, 0.2}), p_a, p_u),
                    std::invalid_argument);
  }
}

TEST_CASE("positions with empty counts drop out of the fit") {
  PositionCurve p_g = curve({0.3, 0.9, 0.1});
  PositionCurve p_a = curve({0.4, 0.0, 0.0});
  PositionCurve p_u = curve({0.2, 0.2, 0.2});
  // With position 1 in play the wild ground-truth entry would drag alpha off 0.5.
  p_g.counts[1] = 0;
  const FusionResult r = epsilon_closed_form(p_g, p_a, p_u);
  // Remaining positions {0, 2}: exactly the midpoint construction.
  CHECK(r.alpha == Catch::Approx(0.5).epsilon(1e-12));

  SECTION("no overlapping coverage at all is an error") {
    p_g.counts = {0, 0, 0};
    CHECK_THROWS_AS(epsilon_closed_form(p_g, p_a, p_u), std::invalid_argument);
  }
}

TEST_CASE("closed form minimizes the brute-force objective") {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 5; ++trial) {
    PositionCurve p_g(10), p_a(10), p_u(10);
    for (std::size_t k = 0; k < 10; ++k) {
      p_g.values[k] = rng.next_double();
      p_a.values[k] = rng.next_double();
      p_u.values[k] = rng.next_double();
      p_g.counts[k] = p_a.counts[k] = p_u.counts[k] = 10;
    }
    const FusionResult r = epsilon_closed_form(p_g, p_a, p_u);
    for (int step = 0; step <= 1000; ++step) {
      const double alpha = step / 1000.0;
      CHECK(r.objective <= brute_force_objective(p_g, p_a, p_u, alpha) + 1e-12);
    }
  }
}

TEST_CASE("brute-force objective is an exact quadratic in alpha") {
  const PositionCurve p_g = curve({0.3, 0.2, 0.1});
  const PositionCurve p_a = curve({0.4, 0.2, 0.0});
  const PositionCurve p_u = curve({0.2, 0.2, 0.2});
  // Constant second difference across an even grid.
  const double f0 = brute_force_objective(p_g, p_a, p_u, 0.1);
  const double f1 = brute_force_objective(p_g, p_a, p_u, 0.2);
  const double f2 = brute_force_objective(p_g, p_a, p_u, 0.3);
  const double f3 = brute_force_objective(p_g, p_a, p_u, 0.4);
  CHECK(f2 - 2 * f1 + f0 == Catch::Approx(f3 - 2 * f2 + f1).epsilon(1e-9));
  CHECK(brute_force_objective(p_a, p_a, p_u, 1.0) == 0.0);
}

TEST_CASE("approx_unaware_curve is the constant mean") {
  const PositionCurve p_a = curve({0.4, 0.2, 0.0});
  const PositionCurve mean = approx_unaware_curve(p_a);
  for (double v : mean.values) CHECK(v == Catch::Approx(0.2).epsilon(1e-15));

  SECTION("a constant curve maps to itself") {
    const PositionCurve flat = curve({0.3, 0.3, 0.3});
    CHECK(approx_unaware_curve(flat).values == flat.values);
  }
  SECTION("empty positions are rejected") {
    PositionCurve holes = p_a;
    holes.counts[1] = 0;
    CHECK_THROWS_AS(approx_unaware_curve(holes), std::invalid_argument);
  }
}

TEST_CASE("mix_predict blends the two models") {
  TrainedModel aware = zero_model(ModelKind::st_psf(), 5);
  aware.position_tower->layers[0].weights.at(0, 0) = 2.0;  // pctr 0.881 at position 0
  TrainedModel unaware = zero_model(ModelKind::base(), 5);

  const FeatureVector u = {}, i = {};
  const double pa = predict(aware, u, i, 0);
  const double pu = predict(unaware, u, i, 0);
  CHECK(mix_predict(aware, unaware, 1.0, u, i, 0) == pa);
  CHECK(mix_predict(aware, unaware, 0.0, u, i, 0) == pu);
  CHECK(mix_predict(aware, unaware, 0.5, u, i, 0) ==
        Catch::Approx(0.5 * pa + 0.5 * pu).epsilon(1e-15));
  CHECK_THROWS_AS(mix_predict(aware, unaware, 1.5, u, i, 0), std::invalid_argument);
}

TEST_CASE("mixture curves and gradients are linear in alpha") {
  // Aware model with a sloped tower; unaware model with a biased main net.
  TrainedModel aware = zero_model(ModelKind::st_psf(), 4);
  for (int p = 0; p < 4; ++p)
    aware.position_tower->layers[0].weights.at(0, static_cast<std::size_t>(p)) = -0.4 * p;
  TrainedModel unaware = zero_model(ModelKind::base(), 4);
  unaware.main_net.layers[0].bias[0] = -0.3;

  std::vector<Exposure> eval;
  for (int rep = 0; rep < 3; ++rep)
    for (int p = 0; p < 4; ++p) eval.push_back(exposure_at(p, (p + rep) % 2));

  const double alpha = 0.37;
  SECTION("serve-curve linearity") {
    const std::vector<double> mixed = mix_predict_batch(aware, unaware, alpha, eval);
    const PositionCurve curve_mix = value_curve(eval, mixed, 4);
    const PositionCurve curve_a = serve_curve(aware, eval);
    const PositionCurve curve_u = serve_curve(unaware, eval);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(curve_mix.values[k] ==
            Catch::Approx(alpha * curve_a.values[k] + (1 - alpha) * curve_u.values[k])
                .margin(1e-12));
    }
  }
  SECTION("position-gradient scaling against a position-constant member") {
    const double g_aware = position_gradient(aware, eval);
    const double g_mix = mix_position_gradient(aware, unaware, alpha, eval);
    CHECK(g_mix == Catch::Approx(alpha * g_aware).margin(1e-12));
  }
}

TEST_CASE("grid search scans alphas by validation AUC") {
  // Labels follow position 0 exactly; only the aware tower can see that.
  TrainedModel aware = zero_model(ModelKind::st_psf(), 2);
  aware.position_tower->layers[0].weights.at(0, 0) = 3.0;
  TrainedModel unaware = zero_model(ModelKind::base(), 2);

  std::vector<Exposure> eval;
  for (int rep = 0; rep < 10; ++rep) {
    eval.push_back(exposure_at(0, 1));
    eval.push_back(exposure_at(1, 0));
  }

  SECTION("aware strictly better on a {0,1} grid returns 1") {
    const GridSearchResult r = grid_search_alpha(aware, unaware, eval, 1.0);
    CHECK(r.alpha == 1.0);
    CHECK(r.auc == 1.0);
    REQUIRE(r.grid.size() == 2);
    CHECK(r.grid[0].first == 0.0);
    CHECK(r.grid[1].first == 1.0);
  }
  SECTION("identical members tie at every alpha; tie-break keeps 0") {
    const GridSearchResult r = grid_search_alpha(aware, aware, eval, 0.25);
    CHECK(r.alpha == 0.0);
  }
  SECTION("fractional steps append the right endpoint once") {
    const GridSearchResult r = grid_search_alpha(aware, unaware, eval, 0.4);
    REQUIRE(r.grid.size() == 4);  // 0, 0.4, 0.8, 1
    CHECK(r.grid.back().first == 1.0);
  }
  SECTION("degenerate inputs are rejected") {
    const std::vector<Exposure> none;
    CHECK_THROWS_AS(grid_search_alpha(aware, unaware, none, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(grid_search_alpha(aware, unaware, eval, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(grid_search_alpha(aware, unaware, eval, 1.5), std::invalid_argument);
  }
}
