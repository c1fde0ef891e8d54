#pragma once

// End-to-end experiment runner.
//
// Per experiment seed s:
//   1. generate ranked traffic (master seed s) and random traffic (its own
//      derived master seed, so the user pools are disjoint),
//   2. split ranked users 80/10/10 into train / early-stop validation /
//      held-out, random users 50/50 into fusing-fit / final test,
//   3. train every requested model kind,
//   4. when "GI" is requested, fit the fusing weight: closed form from the
//      fit-slice curves, plus an AUC grid search for comparison,
//   5. evaluate everything on the random test slice and write artifacts.
//
// Artifacts carry no timestamps and all numbers round-trip exactly, so a
// rerun with the same config reproduces every file byte for byte. The
// mixture method is reported under the kind name "GI"; a trained
// randomization-trick model is "GI(<rate>)".
//
// Layout under the output directory:
//   manifest.json                     effective config + hash
//   summary.json                      seed-averaged headline numbers
//   seed_<s>/metrics_<slug>.json      MetricsReport per kind
//   seed_<s>/curves/curve_gt.csv      ground-truth click curve (test slice)
//   seed_<s>/curves/curve_<slug>.csv  model curves (test slice)
//   seed_<s>/fusion.json              closed-form fit   (GI only)
//   seed_<s>/epsilon_grid.csv         alpha,auc grid    (GI only)
//   seed_<s>/traces/trace_<slug>.csv  step,gradient     (aware kinds, tracing on)
//   seed_<s>/checkpoints/<slug>.json  (save_checkpoints)
//   seed_<s>/datasets/{rs,random}.jsonl  (save_datasets)
//
// emit_plot_data() flattens a finished run into long-format CSVs under
// plotdata/ for external plotting.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "posgrad/artifact_io.hpp"
#include "posgrad/config.hpp"
#include "posgrad/data.hpp"
#include "posgrad/dataset_io.hpp"
#include "posgrad/fusion.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"
#include "posgrad/splits.hpp"
#include "posgrad/synthgen.hpp"

namespace posgrad {

struct ExperimentConfig {
  GenConfig gen;                      // master_seed/traffic_mode are driven per run
  std::size_t random_users = 10000;
  TrainConfig train;                  // seed is derived per experiment seed
  std::vector<std::string> kinds{"BASE", "ST_PSF", "PAL", "GI"};
  double alpha_grid_step = 0.1;
  bool exact_pu = false;              // p_u from the trained BASE model, not the mean
  std::string out_dir = "runs/out";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool deterministic = true;          // single-threaded, reproducible artifacts
  bool save_datasets = false;
  bool save_checkpoints = true;
  std::size_t trace_every = 500;      // steps between gradient-trace probes; 0 = off
  std::size_t trace_probes = 2000;    // probe exposures per trace measurement
  std::size_t gradient_probes = 10000;  // probe budget for the gradient metric
};

struct KindSpec {
  std::string canonical;  // "BASE", "ST_PSF", "PAL", "GI", "GI(0.25)"
  std::string slug;       // filesystem-safe: "GI(0.25)" -> "GI_r0.25"
  bool mixture = false;   // "GI": the explicit two-model mixture
  ModelKind kind;         // meaningful when !mixture
};

inline std::vector<KindSpec> resolve_kinds(const std::vector<std::string>& kinds) {
  if (kinds.empty()) throw std::invalid_argument("config: kinds must not be empty");
  std::vector<KindSpec> out;
  for (const std::string& text : kinds) {
    KindSpec spec;
    if (text == "GI") {
      spec.canonical = "GI";
      spec.slug = "GI";
      spec.mixture = true;
    } else if (const auto kind = ModelKind::parse(text)) {
      spec.kind = *kind;
      spec.canonical = kind->name();
      spec.slug = spec.canonical;
      if (kind->family == ModelFamily::Gi) {
        spec.slug = "GI_r" + spec.canonical.substr(3, spec.canonical.size() - 4);
      }
    } else {
      throw std::invalid_argument("config: unknown model kind \"" + text +
                                  "\" (expected BASE, ST_PSF, PAL, GI or GI(<rate>))");
    }
    for (const KindSpec& prev : out) {
      if (prev.canonical == spec.canonical)
        throw std::invalid_argument("config: duplicate model kind " + spec.canonical);
    }
    out.push_back(std::move(spec));
  }
  const auto listed = [&](const char* name) {
    for (const KindSpec& s : out) {
      if (s.canonical == name) return true;
    }
    return false;
  };
  if (listed("GI") && (!listed("BASE") || !listed("ST_PSF")))
    throw std::invalid_argument("config: the GI mixture needs both BASE and ST_PSF in kinds");
  return out;
}

inline void validate_config(const ExperimentConfig& cfg) {
  cfg.gen.validate();
  cfg.train.validate();
  resolve_kinds(cfg.kinds);
  if (cfg.seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.seeds.size(); ++j) {
      if (cfg.seeds[i] == cfg.seeds[j])
        throw std::invalid_argument("config: duplicate seed " + std::to_string(cfg.seeds[i]));
    }
  }
  if (!(cfg.alpha_grid_step > 0.0 && cfg.alpha_grid_step <= 1.0))
    throw std::invalid_argument("config: alpha_grid_step must lie in (0,1]");
  if (cfg.random_users < 2)
    throw std::invalid_argument("config: random_users must be >= 2");
  if (cfg.out_dir.empty()) throw std::invalid_argument("config: out must not be empty");
  if (cfg.gradient_probes == 0)
    throw std::invalid_argument("config: gradient_probes must be >= 1");
}

// Every key a config file (or --set) may carry. Unknown keys are errors.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "n_users") {
    cfg.gen.n_users = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "items_per_query") {
    cfg.gen.items_per_query = static_cast<int>(config_u64(key, value));
  } else if (key == "noise_scale") {
    cfg.gen.noise_scale = config_double(key, value);
  } else if (key == "resample_noise") {
    cfg.gen.resample_noise = config_bool(key, value);
  } else if (key == "random_users") {
    cfg.random_users = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "hidden_sizes") {
    cfg.train.hidden_sizes = config_size_list(key, value);
  } else if (key == "l2_coeff") {
    cfg.train.l2_coeff = config_double(key, value);
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = config_double(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "beta1") {
    cfg.train.beta1 = config_double(key, value);
  } else if (key == "beta2") {
    cfg.train.beta2 = config_double(key, value);
  } else if (key == "adam_epsilon") {
    cfg.train.adam_epsilon = config_double(key, value);
  } else if (key == "max_epochs") {
    cfg.train.max_epochs = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "patience") {
    cfg.train.patience = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "kinds") {
    cfg.kinds = config_list(value);
  } else if (key == "alpha_grid_step") {
    cfg.alpha_grid_step = config_double(key, value);
  } else if (key == "exact_pu") {
    cfg.exact_pu = config_bool(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "seeds") {
    cfg.seeds = config_u64_list(key, value);
  } else if (key == "deterministic") {
    cfg.deterministic = config_bool(key, value);
  } else if (key == "save_datasets") {
    cfg.save_datasets = config_bool(key, value);
  } else if (key == "save_checkpoints") {
    cfg.save_checkpoints = config_bool(key, value);
  } else if (key == "trace_every") {
    cfg.trace_every = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "trace_probes") {
    cfg.trace_probes = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "gradient_probes") {
    cfg.gradient_probes = static_cast<std::size_t>(config_u64(key, value));
  } else {
    throw std::runtime_error("config: unknown key \"" + key + "\"");
  }
}

inline void apply_config_entries(ExperimentConfig& cfg,
                                 const std::vector<ConfigEntry>& entries) {
  for (const ConfigEntry& e : entries) apply_config_entry(cfg, e.key, e.value);
}

// The effective configuration, canonically rendered (what the manifest holds).
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_users"] = cfg.gen.n_users;
  j["items_per_query"] = cfg.gen.items_per_query;
  j["noise_scale"] = cfg.gen.noise_scale;
  j["resample_noise"] = cfg.gen.resample_noise;
  j["random_users"] = cfg.random_users;
  j["hidden_sizes"] = cfg.train.hidden_sizes;
  j["l2_coeff"] = cfg.train.l2_coeff;
  j["learning_rate"] = cfg.train.learning_rate;
  j["batch_size"] = cfg.train.batch_size;
  j["beta1"] = cfg.train.beta1;
  j["beta2"] = cfg.train.beta2;
  j["adam_epsilon"] = cfg.train.adam_epsilon;
  j["max_epochs"] = cfg.train.max_epochs;
  j["patience"] = cfg.train.patience;
  std::vector<std::string> canonical;
  for (const KindSpec& s : resolve_kinds(cfg.kinds)) canonical.push_back(s.canonical);
  j["kinds"] = canonical;
  j["alpha_grid_step"] = cfg.alpha_grid_step;
  j["exact_pu"] = cfg.exact_pu;
  j["out"] = cfg.out_dir;
  j["seeds"] = cfg.seeds;
  j["deterministic"] = cfg.deterministic;
  j["save_datasets"] = cfg.save_datasets;
  j["save_checkpoints"] = cfg.save_checkpoints;
  j["trace_every"] = cfg.trace_every;
  j["trace_probes"] = cfg.trace_probes;
  j["gradient_probes"] = cfg.gradient_probes;
  return j;
}

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("stage \"" + stage_name + "\": " + what),
        stage(std::move(stage_name)) {}
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::map<std::string, MetricsReport> metrics;  // by canonical kind
  std::map<std::string, TrainDiagnostics> diagnostics;
  bool has_fusion = false;
  FusionResult fusion;
  GridSearchResult grid;          // fit-slice AUC over the alpha grid
  double mix_auc_grid_test = 0.0; // test AUC of the mixture at the grid optimum
};

struct RunOutcome {
  ExperimentConfig config;
  std::vector<KindSpec> kinds;
  std::vector<SeedOutcome> seeds;
};

namespace detail {

template <typename F>
auto stage(const std::string& name, std::ostream* log, F&& body) -> decltype(body()) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      if (log) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        *log << "  " << name << " (" << dt.count() << "s)\n" << std::flush;
      }
    } else {
      auto result = body();
      if (log) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        *log << "  " << name << " (" << dt.count() << "s)\n" << std::flush;
      }
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::vector<int> labels_of(std::span<const Exposure> exposures) {
  std::vector<int> labels(exposures.size());
  for (std::size_t i = 0; i < exposures.size(); ++i) labels[i] = exposures[i].label;
  return labels;
}

inline MetricsReport make_report(std::span<const Exposure> test, std::span<const double> preds,
                                 const PositionCurve& gt_curve,
                                 std::span<const double> gt_rel, double gradient, int k) {
  MetricsReport r;
  const std::vector<int> labels = labels_of(test);
  r.auc = auc(std::span<const int>(labels), preds);
  r.curve = value_curve(test, preds, static_cast<std::size_t>(k));
  r.relative_curve = relative_curve(r.curve);
  const EstimationError err = estimation_error(r.relative_curve, gt_rel);
  r.estimation_error_sq = err.sum_sq;
  r.estimation_error_maxabs = err.max_abs;
  r.overestimation_ratio = overestimation_ratio(r.curve, gt_curve);
  r.position_gradient = gradient;
  return r;
}

inline void write_trace_csv(const std::vector<std::pair<std::int64_t, double>>& trace,
                            const std::string& path) {
  std::string text = "step,gradient\n";
  for (const auto& [step, gradient] : trace) {
    text += std::to_string(step) + "," + fmt_double(gradient) + "\n";
  }
  save_text(path, text);
}

inline void write_grid_csv(const GridSearchResult& grid, const std::string& path) {
  std::string text = "alpha,auc\n";
  for (const auto& [alpha, score] : grid.grid) {
    text += fmt_double(alpha) + "," + fmt_double(score) + "\n";
  }
  save_text(path, text);
}

}  // namespace detail

inline RunOutcome run_pipeline(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  const std::vector<KindSpec> kinds = resolve_kinds(cfg.kinds);
  const int k = cfg.gen.items_per_query;
  const bool want_mixture = [&] {
    for (const KindSpec& s : kinds) {
      if (s.mixture) return true;
    }
    return false;
  }();

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  {
    nlohmann::ordered_json manifest;
    manifest["format"] = "posgrad-run";
    manifest["version"] = kVersion;
    const nlohmann::ordered_json config_json = config_to_json(cfg);
    manifest["config_hash"] = fnv1a_hex(config_json.dump());
    manifest["config"] = config_json;
    save_json(manifest, (out / "manifest.json").string());
  }

  RunOutcome outcome;
  outcome.config = cfg;
  outcome.kinds = kinds;

  for (const std::uint64_t seed : cfg.seeds) {
    if (log) *log << "seed " << seed << "\n" << std::flush;
    SeedOutcome so;
    so.seed = seed;
    const fs::path seed_dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir / "curves");

    // -- data ------------------------------------------------------------
    std::vector<Exposure> rs_data, rnd_data;
    detail::stage("generate seed " + std::to_string(seed), log, [&] {
      GenConfig rs_cfg = cfg.gen;
      rs_cfg.traffic_mode = Traffic::RS;
      rs_cfg.master_seed = seed;
      GenConfig rnd_cfg = cfg.gen;
      rnd_cfg.traffic_mode = Traffic::Random;
      rnd_cfg.n_users = cfg.random_users;
      rnd_cfg.master_seed = random_traffic_seed(seed);
      const std::vector<QueryGroup> rs_groups = generate(rs_cfg);
      const std::vector<QueryGroup> rnd_groups = generate(rnd_cfg);
      if (cfg.save_datasets) {
        fs::create_directories(seed_dir / "datasets");
        export_jsonl(rs_groups, (seed_dir / "datasets" / "rs.jsonl").string());
        export_jsonl(rnd_groups, (seed_dir / "datasets" / "random.jsonl").string());
      }
      rs_data = flatten(rs_groups);
      rnd_data = flatten(rnd_groups);
    });

    const RsSplits rs = split_rs(rs_data, k);
    const RandomSplits rnd = split_random(rnd_data, k);
    const PositionCurve gt_test = empirical_curve(rnd.test, static_cast<std::size_t>(k));
    const PositionCurve gt_fit = empirical_curve(rnd.fit, static_cast<std::size_t>(k));
    const std::vector<double> gt_rel = relative_curve(gt_test);
    write_curve_csv(gt_test, (seed_dir / "curves" / "curve_gt.csv").string());

    const std::span<const Exposure> grad_probes =
        rnd.fit.subspan(0, std::min(cfg.gradient_probes, rnd.fit.size()));
    const std::span<const Exposure> trace_probes =
        rnd.fit.subspan(0, std::min(cfg.trace_probes, rnd.fit.size()));
    const bool tracing = cfg.trace_every > 0 && !trace_probes.empty();

    // -- training ----------------------------------------------------------
    std::map<std::string, TrainedModel> models;
    for (const KindSpec& spec : kinds) {
      if (spec.mixture) continue;
      detail::stage("train " + spec.canonical + " seed " + std::to_string(seed), log, [&] {
        TrainConfig tc = cfg.train;
        tc.seed = model_train_seed(seed);
        GradientTraceOptions trace{trace_probes, cfg.trace_every};
        const bool trace_this = tracing && spec.kind.position_aware();
        TrainDiagnostics diag;
        TrainedModel model = train(spec.kind, rs.train, rs.validation, k, tc,
                                   trace_this ? &trace : nullptr, &diag);
        if (log) {
          *log << "    val_auc " << diag.best_validation_auc << " (epoch "
               << diag.best_epoch + 1 << "/" << diag.validation_auc.size() << ")\n"
               << std::flush;
        }
        if (cfg.save_checkpoints) {
          fs::create_directories(seed_dir / "checkpoints");
          save_checkpoint(model, (seed_dir / "checkpoints" / (spec.slug + ".json")).string());
        }
        if (trace_this) {
          fs::create_directories(seed_dir / "traces");
          detail::write_trace_csv(diag.gradient_trace,
                                  (seed_dir / "traces" / ("trace_" + spec.slug + ".csv")).string());
        }
        so.diagnostics[spec.canonical] = std::move(diag);
        models.emplace(spec.canonical, std::move(model));
      });
    }

    // -- fusing weight -----------------------------------------------------
    if (want_mixture) {
      detail::stage("fuse seed " + std::to_string(seed), log, [&] {
        const TrainedModel& aware = models.at("ST_PSF");
        const TrainedModel& unaware = models.at("BASE");
        const PositionCurve p_a = serve_curve(aware, rnd.fit);
        const PositionCurve p_u =
            cfg.exact_pu ? serve_curve(unaware, rnd.fit) : approx_unaware_curve(p_a);
        so.fusion = epsilon_closed_form(gt_fit, p_a, p_u);
        so.grid = grid_search_alpha(aware, unaware, rnd.fit, cfg.alpha_grid_step);
        so.has_fusion = true;
        if (log) {
          *log << "    alpha " << so.fusion.alpha << " (grid " << so.grid.alpha << ")\n"
               << std::flush;
        }
        save_json(fusion_to_json(so.fusion), (seed_dir / "fusion.json").string());
        detail::write_grid_csv(so.grid, (seed_dir / "epsilon_grid.csv").string());
      });
    }

    // -- evaluation ----------------------------------------------------------
    for (const KindSpec& spec : kinds) {
      detail::stage("evaluate " + spec.canonical + " seed " + std::to_string(seed), log, [&] {
        MetricsReport report;
        if (spec.mixture) {
          const TrainedModel& aware = models.at("ST_PSF");
          const TrainedModel& unaware = models.at("BASE");
          const double alpha = so.fusion.alpha;
          const std::vector<double> preds =
              mix_predict_batch(aware, unaware, alpha, rnd.test);
          const double gradient = mix_position_gradient(aware, unaware, alpha, grad_probes);
          report = detail::make_report(rnd.test, preds, gt_test, gt_rel, gradient, k);
          const std::vector<double> grid_preds =
              mix_predict_batch(aware, unaware, so.grid.alpha, rnd.test);
          const std::vector<int> labels = detail::labels_of(rnd.test);
          so.mix_auc_grid_test =
              auc(std::span<const int>(labels), std::span<const double>(grid_preds));
        } else {
          const TrainedModel& model = models.at(spec.canonical);
          const std::vector<double> preds = predict_batch(model, rnd.test);
          const double gradient = position_gradient(model, grad_probes);
          report = detail::make_report(rnd.test, preds, gt_test, gt_rel, gradient, k);
        }
        save_json(metrics_to_json(report),
                  (seed_dir / ("metrics_" + spec.slug + ".json")).string());
        write_curve_csv(report.curve,
                        (seed_dir / "curves" / ("curve_" + spec.slug + ".csv")).string());
        if (log) {
          *log << "    " << spec.canonical << " auc " << report.auc << " ratio "
               << report.overestimation_ratio << "\n"
               << std::flush;
        }
        so.metrics.emplace(spec.canonical, std::move(report));
      });
    }
    outcome.seeds.push_back(std::move(so));
  }

  // -- summary ---------------------------------------------------------------
  const auto stat = [&](auto getter) {
    nlohmann::ordered_json j;
    std::vector<double> per_seed;
    double sum = 0.0;
    for (const SeedOutcome& so : outcome.seeds) {
      per_seed.push_back(getter(so));
      sum += per_seed.back();
    }
    j["per_seed"] = per_seed;
    j["mean"] = sum / static_cast<double>(per_seed.size());
    return j;
  };
  nlohmann::ordered_json summary;
  summary["seeds"] = cfg.seeds;
  nlohmann::ordered_json per_kind;
  for (const KindSpec& spec : kinds) {
    nlohmann::ordered_json kj;
    kj["auc"] = stat([&](const SeedOutcome& so) { return so.metrics.at(spec.canonical).auc; });
    kj["overestimation_ratio"] = stat(
        [&](const SeedOutcome& so) { return so.metrics.at(spec.canonical).overestimation_ratio; });
    kj["estimation_error_sq"] = stat(
        [&](const SeedOutcome& so) { return so.metrics.at(spec.canonical).estimation_error_sq; });
    kj["position_gradient"] = stat(
        [&](const SeedOutcome& so) { return so.metrics.at(spec.canonical).position_gradient; });
    per_kind[spec.canonical] = std::move(kj);
  }
  summary["kinds"] = std::move(per_kind);
  if (want_mixture) {
    nlohmann::ordered_json fj;
    fj["alpha"] = stat([](const SeedOutcome& so) { return so.fusion.alpha; });
    fj["grid_alpha"] = stat([](const SeedOutcome& so) { return so.grid.alpha; });
    fj["mix_auc_grid_test"] = stat([](const SeedOutcome& so) { return so.mix_auc_grid_test; });
    summary["fusion"] = std::move(fj);
  }
  save_json(summary, (out / "summary.json").string());
  return outcome;
}

// ---- plot data -------------------------------------------------------------

namespace detail {

// Insert the seed as a middle column of an existing two-column CSV, keeping
// the numeric text untouched.
inline void append_with_seed(const std::string& src_path, std::uint64_t seed,
                             const std::string& expected_header, std::string& sink) {
  std::ifstream in(src_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + src_path);
  std::string line;
  if (!std::getline(in, line) || line != expected_header)
    throw std::runtime_error(src_path + ": expected header \"" + expected_header + "\"");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(src_path + ": malformed row \"" + line + "\"");
    sink += line.substr(0, comma) + "," + std::to_string(seed) + "," + line.substr(comma + 1) +
            "\n";
  }
}

}  // namespace detail

// Flatten a completed run into plotdata/ CSVs: per-kind relative curves
// (position,seed,value), gradient traces (step,seed,gradient) and the alpha
// grid (alpha,seed,auc). Rerunning overwrites the same bytes.
inline void emit_plot_data(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const fs::path root(run_dir);
  const nlohmann::json manifest = load_json((root / "manifest.json").string());
  std::vector<std::string> kind_names;
  std::vector<std::uint64_t> seeds;
  std::size_t trace_every = 0, trace_probes = 0;
  try {
    const nlohmann::json& c = manifest.at("config");
    kind_names = c.at("kinds").get<std::vector<std::string>>();
    seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
    trace_every = c.at("trace_every").get<std::size_t>();
    trace_probes = c.at("trace_probes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(run_dir + "/manifest.json: " + e.what());
  }
  const std::vector<KindSpec> kinds = resolve_kinds(kind_names);
  const bool tracing = trace_every > 0 && trace_probes > 0;
  const bool want_mixture = [&] {
    for (const KindSpec& s : kinds) {
      if (s.mixture) return true;
    }
    return false;
  }();

  // Fail up front, listing everything that's absent.
  std::vector<std::string> needed;
  for (const std::uint64_t seed : seeds) {
    const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
    needed.push_back((seed_dir / "curves" / "curve_gt.csv").string());
    for (const KindSpec& spec : kinds) {
      needed.push_back((seed_dir / ("metrics_" + spec.slug + ".json")).string());
      if (tracing && !spec.mixture && spec.kind.position_aware())
        needed.push_back((seed_dir / "traces" / ("trace_" + spec.slug + ".csv")).string());
    }
    if (want_mixture) needed.push_back((seed_dir / "epsilon_grid.csv").string());
  }
  std::string missing;
  for (const std::string& path : needed) {
    if (!fs::exists(path)) missing += "\n  " + path;
  }
  if (!missing.empty())
    throw std::runtime_error("emit_plot_data: missing run artifacts:" + missing);

  fs::create_directories(root / "plotdata");

  // Relative curves: the models' from their metrics, ground truth from its curve.
  for (const KindSpec& spec : kinds) {
    std::string text = "position,seed,value\n";
    for (const std::uint64_t seed : seeds) {
      const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
      const MetricsReport report =
          metrics_from_json(load_json((seed_dir / ("metrics_" + spec.slug + ".json")).string()));
      for (std::size_t pos = 0; pos < report.relative_curve.size(); ++pos) {
        text += std::to_string(pos) + "," + std::to_string(seed) + "," +
                fmt_double(report.relative_curve[pos]) + "\n";
      }
    }
    save_text((root / "plotdata" / ("relcurve_" + spec.slug + ".csv")).string(), text);
  }
  {
    std::string text = "position,seed,value\n";
    for (const std::uint64_t seed : seeds) {
      const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
      const PositionCurve gt = read_curve_csv((seed_dir / "curves" / "curve_gt.csv").string());
      const std::vector<double> rel = relative_curve(gt);
      for (std::size_t pos = 0; pos < rel.size(); ++pos) {
        text += std::to_string(pos) + "," + std::to_string(seed) + "," + fmt_double(rel[pos]) +
                "\n";
      }
    }
    save_text((root / "plotdata" / "relcurve_gt.csv").string(), text);
  }

  if (tracing) {
    for (const KindSpec& spec : kinds) {
      if (spec.mixture || !spec.kind.position_aware()) continue;
      std::string text = "step,seed,gradient\n";
      for (const std::uint64_t seed : seeds) {
        const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
        detail::append_with_seed((seed_dir / "traces" / ("trace_" + spec.slug + ".csv")).string(),
                                 seed, "step,gradient", text);
      }
      save_text((root / "plotdata" / ("trace_" + spec.slug + ".csv")).string(), text);
    }
  }

  if (want_mixture) {
    std::string text = "alpha,seed,auc\n";
    for (const std::uint64_t seed : seeds) {
      const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
      detail::append_with_seed((seed_dir / "epsilon_grid.csv").string(), seed, "alpha,auc",
                               text);
    }
    save_text((root / "plotdata" / "epsilon_grid.csv").string(), text);
  }
}

}  // namespace posgrad
