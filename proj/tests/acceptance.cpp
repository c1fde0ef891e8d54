// Acceptance gate: exercises the laboratory end to end and prints one
// PASS/FAIL line per criterion. Exits non-zero if anything fails. Expensive
// criteria run last; the whole gate fits comfortably in a ctest slot.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "posgrad/fusion.hpp"
#include "posgrad/models.hpp"
#include "posgrad/nnet.hpp"
#include "posgrad/overestimation.hpp"
#include "posgrad/pipeline.hpp"
#include "posgrad/rng.hpp"
#include "posgrad/splits.hpp"
#include "posgrad/synthgen.hpp"

using namespace posgrad;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    const auto tick = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() / (std::string("posgrad-accept-") + tag + "-" +
                                        std::to_string(tick));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] =
        std::string((std::istreambuf_iterator<char>(in)), {});
  }
  return files;
}

std::vector<Exposure> make_dataset(std::size_t users, int k, Traffic mode,
                                   std::uint64_t master_seed) {
  GenConfig cfg;
  cfg.n_users = users;
  cfg.items_per_query = k;
  cfg.traffic_mode = mode;
  cfg.master_seed = mode == Traffic::Random ? random_traffic_seed(master_seed) : master_seed;
  return flatten(generate(cfg));
}

// --- criterion 1: repro-table1 losses at four decimals, < 1 s ---------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Table1 t = repro_table1();
  const double secs = seconds_since(t0);
  const auto r4 = [](double v) { return fmt("%.4f", v); };
  const std::string got = "(" + r4(t.ground_truth.loss_emp) + ", " + r4(t.ground_truth.loss_reg) +
                          ", " + r4(t.ground_truth.total) + ") / (" +
                          r4(t.overestimation.loss_emp) + ", " + r4(t.overestimation.loss_reg) +
                          ", " + r4(t.overestimation.total) + ")";
  const bool pass = got == "(0.0000, 0.0110, 0.0110) / (0.0004, 0.0093, 0.0097)" && secs < 1.0;
  report(1, pass, "repro-table1 losses " + got + " [" + fmt("%.2f", secs) + "s < 1s]");
}

// --- criterion 2: closed-form alpha vs 1e-4 grid over 100 triples, < 5 s ----

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(20240814);
  double max_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PositionCurve g(10), a(10), u(10);
    for (std::size_t i = 0; i < 10; ++i) {
      g.values[i] = rng.next_double();
      a.values[i] = rng.next_double();
      u.values[i] = rng.next_double();
      g.counts[i] = a.counts[i] = u.counts[i] = 10;
    }
    const FusionResult closed = epsilon_closed_form(g, a, u);
    double best_alpha = 0.0, best_obj = brute_force_objective(g, a, u, 0.0);
    for (int step = 1; step <= 10000; ++step) {
      const double alpha = step * 1e-4;
      const double obj = brute_force_objective(g, a, u, alpha);
      if (obj < best_obj) {
        best_obj = obj;
        best_alpha = alpha;
      }
    }
    max_gap = std::max(max_gap, std::abs(closed.alpha - best_alpha));
  }
  const double secs = seconds_since(t0);
  const bool pass = max_gap <= 1e-4 && secs < 5.0;
  report(2, pass, "closed-form alpha within " + fmt("%.2e", max_gap) +
                      " of the 1e-4 grid argmin over 100 triples (limit 1e-4) [" +
                      fmt("%.2f", secs) + "s < 5s]");
}

// --- criterion 3: finite-difference gradient check on 10 random nets --------

void criterion_3() {
  const std::vector<std::vector<std::size_t>> shapes = {
      {4, 1}, {6, 3, 1}, {5, 8, 1}, {7, 16, 4, 1}, {10, 8, 8, 1}};
  const double l2s[] = {0.0, 1e-4, 1e-2};
  double worst = 0.0;
  for (int net = 0; net < 10; ++net) {
    SplitMix64 rng(1000 + static_cast<std::uint64_t>(net));
    const std::vector<std::size_t>& shape = shapes[static_cast<std::size_t>(net) % shapes.size()];
    const MlpParams params = MlpParams::glorot_uniform(shape, rng);
    const std::size_t batch = 16;
    Matrix inputs(batch, shape.front());
    for (double& v : inputs.data) v = rng.next_double();
    std::vector<int> labels(batch);
    for (int& y : labels) y = rng.next_bernoulli(0.3) ? 1 : 0;
    const double rel = finite_diff_check(params, inputs, std::span<const int>(labels),
                                         l2s[net % 3], 1e-5);
    worst = std::max(worst, rel);
  }
  report(3, worst < 1e-4,
         "finite-difference max relative error " + fmt("%.2e", worst) +
             " over 10 random networks (limit 1e-4)");
}

// --- criterion 9: byte-identical rerun of a deterministic pipeline ----------

ExperimentConfig tiny_run_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.gen.n_users = 200;
  cfg.gen.items_per_query = 3;
  cfg.random_users = 60;
  cfg.train.hidden_sizes = {4};
  cfg.train.max_epochs = 2;
  cfg.train.patience = 2;
  cfg.train.batch_size = 128;
  cfg.kinds = {"BASE", "ST_PSF", "GI"};
  cfg.alpha_grid_step = 0.5;
  cfg.seeds = {1, 2};
  cfg.out_dir = out_dir;
  cfg.deterministic = true;
  cfg.save_checkpoints = true;
  cfg.trace_every = 0;
  cfg.gradient_probes = 100;
  return cfg;
}

void criterion_9() {
  TempDir tmp("determinism");
  const std::string out = (tmp.path / "run").string();
  const ExperimentConfig cfg = tiny_run_config(out);
  run_pipeline(cfg, nullptr);
  const std::map<std::string, std::string> first = slurp_tree(out);
  run_pipeline(cfg, nullptr);
  const std::map<std::string, std::string> second = slurp_tree(out);

  std::size_t metrics_files = 0, mismatches = 0;
  bool same_tree = first.size() == second.size();
  for (const auto& [rel, bytes] : first) {
    metrics_files += rel.find("metrics_") != std::string::npos;
    const auto it = second.find(rel);
    if (it == second.end() || it->second != bytes) ++mismatches;
  }
  const bool pass = same_tree && mismatches == 0 && metrics_files == 6 && !first.empty();
  report(9, pass,
         "two deterministic runs reproduced " + std::to_string(first.size()) +
             " artifact files byte-identically (" + std::to_string(metrics_files) +
             " metrics JSONs, " + std::to_string(mismatches) + " mismatches)");
}

// --- criterion 8: position-gradient properties -------------------------------

void criterion_8() {
  // (a)+(b) on a small trained pair.
  const int k = 5;
  const std::vector<Exposure> rs = make_dataset(400, k, Traffic::RS, 11);
  const RsSplits splits = split_rs(rs, k);
  TrainConfig tc;
  tc.hidden_sizes = {8};
  tc.max_epochs = 3;
  tc.patience = 3;
  tc.batch_size = 256;
  tc.seed = model_train_seed(11);
  const TrainedModel base = train(ModelKind::base(), splits.train, splits.validation, k, tc);
  const TrainedModel aware = train(ModelKind::st_psf(), splits.train, splits.validation, k, tc);
  const std::vector<Exposure> probes_pool = make_dataset(60, k, Traffic::Random, 11);
  const std::span<const Exposure> probes(probes_pool.data(), probes_pool.size());

  const bool base_zero = position_gradient(base, probes) == 0.0;

  const double g_aware = position_gradient(aware, probes);
  double worst_rel = 0.0;
  for (const double alpha : {0.25, 0.5, 0.75}) {
    const double g_mix = mix_position_gradient(aware, base, alpha, probes);
    const double expected = alpha * g_aware;
    worst_rel = std::max(worst_rel, std::abs(g_mix - expected) /
                                        std::max(std::abs(expected), 1e-300));
  }
  const bool mix_scales = worst_rel <= 1e-12;

  // (c) GI gradient magnitude vs randomization rate, seeds-averaged.
  const double rates[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  double mean_grad[5] = {};
  for (int ri = 0; ri < 5; ++ri) {
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const std::vector<Exposure> rs10 = make_dataset(10000, 10, Traffic::RS, seed);
      const RsSplits sp = split_rs(rs10, 10);
      TrainConfig gi_tc;  // defaults: {64,32}, l2 1e-4
      gi_tc.seed = model_train_seed(seed);
      const TrainedModel m =
          train(ModelKind::gi(rates[ri]), sp.train, sp.validation, 10, gi_tc);
      const std::vector<Exposure> rnd = make_dataset(2000, 10, Traffic::Random, seed);
      const std::span<const Exposure> p(rnd.data(), std::min<std::size_t>(10000, rnd.size()));
      mean_grad[ri] += position_gradient(m, p) / 3.0;
    }
  }
  bool monotone = true;
  std::string path;
  for (int ri = 0; ri < 5; ++ri) {
    monotone = monotone &&
               (ri == 0 || std::abs(mean_grad[ri]) <= 1.10 * std::abs(mean_grad[ri - 1]));
    path += (ri ? " -> " : "") + fmt("%.5f", mean_grad[ri]);
  }
  const bool fully_randomized_flat = std::abs(mean_grad[4]) < 0.10 * std::abs(mean_grad[0]);

  report(8, base_zero && mix_scales && monotone && fully_randomized_flat,
         std::string("BASE gradient exactly 0: ") + (base_zero ? "yes" : "NO") +
             "; mixture = alpha x aware within rel " + fmt("%.1e", worst_rel) +
             " (limit 1e-12); GI gradient by rate {0,0.25,0.5,0.75,1}: " + path +
             (monotone ? " monotone within 10%" : " NOT monotone") + "; |GI(1)| " +
             fmt("%.5f", std::abs(mean_grad[4])) + " < 10% of |GI(0)| " +
             fmt("%.5f", std::abs(mean_grad[0])) + (fully_randomized_flat ? "" : " VIOLATED"));
}

// --- criterion 5: L2 sweep trend ---------------------------------------------

void criterion_5() {
  GenConfig gen;
  gen.n_users = 10000;
  gen.items_per_query = 4;
  gen.noise_scale = 3.0;
  TrainConfig tc;
  tc.hidden_sizes = {128, 64};
  const std::vector<double> lambdas = {0.0, 1e-5, 1e-4, 1e-3};
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
  const L2SweepResult sweep = l2_sweep(lambdas, gen, 2000, tc, seeds);

  const double m0 = sweep.mean_ratios[0], m5 = sweep.mean_ratios[1],
               m4 = sweep.mean_ratios[2], m3 = sweep.mean_ratios[3];
  const bool non_decreasing = m5 <= m4 && m4 <= m3;
  const bool zero_smallest = m0 <= std::min({m5, m4, m3}) + 0.02;
  report(5, non_decreasing && zero_smallest,
         "seed-averaged overestimation ratios lambda 0: " + fmt("%.4f", m0) +
             ", 1e-5: " + fmt("%.4f", m5) + ", 1e-4: " + fmt("%.4f", m4) +
             ", 1e-3: " + fmt("%.4f", m3) +
             (non_decreasing ? "; non-decreasing over {1e-5,1e-4,1e-3}"
                             : "; NOT non-decreasing") +
             (zero_smallest ? "; lambda=0 smallest (tol 0.02)" : "; lambda=0 NOT smallest"));
}

// --- criteria 4, 6, 7: one desk-scale run ------------------------------------

void criteria_4_6_7() {
  TempDir tmp("desk");
  ExperimentConfig cfg;
  cfg.gen.n_users = 50000;       // K = 10, noise 1.0, l2 1e-4: the defaults
  cfg.random_users = 10000;
  cfg.kinds = {"BASE", "ST_PSF", "GI"};
  cfg.seeds = {1, 2, 3};
  cfg.out_dir = (tmp.path / "run").string();
  cfg.save_checkpoints = false;
  cfg.trace_every = 0;

  const auto t0 = std::chrono::steady_clock::now();
  const RunOutcome outcome = run_pipeline(cfg, nullptr);
  const double secs = seconds_since(t0);

  const auto mean = [&](auto getter) {
    double sum = 0.0;
    for (const SeedOutcome& so : outcome.seeds) sum += getter(so);
    return sum / static_cast<double>(outcome.seeds.size());
  };
  const double ratio_st =
      mean([](const SeedOutcome& s) { return s.metrics.at("ST_PSF").overestimation_ratio; });
  const double ratio_base =
      mean([](const SeedOutcome& s) { return s.metrics.at("BASE").overestimation_ratio; });
  const double auc_gi = mean([](const SeedOutcome& s) { return s.metrics.at("GI").auc; });
  const double auc_st = mean([](const SeedOutcome& s) { return s.metrics.at("ST_PSF").auc; });
  const double auc_base = mean([](const SeedOutcome& s) { return s.metrics.at("BASE").auc; });
  const double auc_grid = mean([](const SeedOutcome& s) { return s.mix_auc_grid_test; });

  report(4, ratio_st > 1.1 && ratio_base < 1.05 && secs < 900.0,
         "desk run ST_PSF ratio " + fmt("%.3f", ratio_st) + " > 1.1, BASE ratio " +
             fmt("%.3f", ratio_base) + " < 1.05 [" + fmt("%.0f", secs) + "s < 900s]");
  report(6, auc_gi - auc_st >= 0.002 && auc_gi - auc_base >= 0.002,
         "GI auc " + fmt("%.4f", auc_gi) + " beats ST_PSF " + fmt("%.4f", auc_st) + " (+" +
             fmt("%.4f", auc_gi - auc_st) + ") and BASE " + fmt("%.4f", auc_base) + " (+" +
             fmt("%.4f", auc_gi - auc_base) + "), margins >= 0.002");
  report(7, std::abs(auc_gi - auc_grid) <= 0.002,
         "|auc(closed-form alpha) - auc(grid-best alpha)| = " +
             fmt("%.5f", std::abs(auc_gi - auc_grid)) + " <= 0.002 (grid step 0.1)");
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_9();
    criterion_8();
    criterion_5();
    criteria_4_6_7();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance: unhandled exception: %s\n", e.what());
    return 2;
  }
  std::printf("acceptance: %d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
