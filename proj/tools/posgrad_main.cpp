// posgrad: synthetic position-bias laboratory.
//
// Subcommands cover the full workflow: generate click logs (gen), train and
// evaluate CTR models (train, eval), fit and probe the fusing weight (fuse,
// grid-eps), reproduce the analytical examples (repro-table1, sweep-l2), and
// run the whole experiment with artifacts (run, emit-plots).
//
// Configuration comes from a flat key=value file (--config) and/or repeated
// --set key=value overrides; --set wins. Every run is deterministic given
// its seeds.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "posgrad/artifact_io.hpp"
#include "posgrad/config.hpp"
#include "posgrad/data.hpp"
#include "posgrad/dataset_io.hpp"
#include "posgrad/fusion.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"
#include "posgrad/overestimation.hpp"
#include "posgrad/pipeline.hpp"
#include "posgrad/splits.hpp"
#include "posgrad/synthgen.hpp"

namespace {

posgrad::ExperimentConfig load_experiment_config(const std::string& config_path,
                                                 const std::vector<std::string>& overrides) {
  posgrad::ExperimentConfig cfg;
  if (!config_path.empty()) {
    posgrad::apply_config_entries(cfg, posgrad::parse_config_file(config_path));
  }
  for (const std::string& kv : overrides) {
    const auto entries = posgrad::parse_config_text(kv, "--set");
    if (entries.size() != 1)
      throw std::runtime_error("--set expects exactly one key=value, got \"" + kv + "\"");
    posgrad::apply_config_entry(cfg, entries[0].key, entries[0].value);
  }
  return cfg;
}

posgrad::ModelKind parse_kind_or_throw(const std::string& text) {
  const auto kind = posgrad::ModelKind::parse(text);
  if (!kind)
    throw std::runtime_error("unknown model kind \"" + text +
                             "\" (expected BASE, ST_PSF, PAL or GI(<rate>))");
  return *kind;
}

struct CommonOpts {
  std::string config;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "flat key=value configuration file");
  cmd->add_option("--set", opts.overrides, "override one config key (repeatable)")
      ->type_name("KEY=VALUE");
}

// ---- gen --------------------------------------------------------------------

struct GenOpts {
  CommonOpts common;
  std::string out;
  std::uint64_t seed = 1;
  std::string traffic = "RS";
  std::uint64_t users = 0;  // 0: keep the config value
};

void cmd_gen(const GenOpts& o) {
  posgrad::ExperimentConfig cfg = load_experiment_config(o.common.config, o.common.overrides);
  posgrad::GenConfig gen = cfg.gen;
  gen.master_seed = o.seed;
  if (!posgrad::parse_traffic(o.traffic, gen.traffic_mode))
    throw std::runtime_error("--traffic must be RS or RANDOM");
  if (o.users > 0) gen.n_users = static_cast<std::size_t>(o.users);
  gen.validate();
  const std::vector<posgrad::QueryGroup> groups = posgrad::generate(gen);
  posgrad::export_jsonl(groups, o.out);
  std::cout << "wrote " << groups.size() * groups.front().exposures.size() << " exposures ("
            << groups.size() << " query groups) to " << o.out << "\n";
}

// ---- train --------------------------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::string data, kind_text = "ST_PSF", out;
  std::uint64_t seed = 1;
};

void cmd_train(const TrainOpts& o) {
  posgrad::ExperimentConfig cfg = load_experiment_config(o.common.config, o.common.overrides);
  const posgrad::ModelKind kind = parse_kind_or_throw(o.kind_text);
  const std::vector<posgrad::QueryGroup> groups = posgrad::import_jsonl(o.data);
  const int k = static_cast<int>(groups.front().exposures.size());
  const std::vector<posgrad::Exposure> data = posgrad::flatten(groups);
  const posgrad::RsSplits splits = posgrad::split_rs(data, k);

  posgrad::TrainConfig tc = cfg.train;
  tc.seed = o.seed;
  posgrad::TrainDiagnostics diag;
  const posgrad::TrainedModel model =
      posgrad::train(kind, splits.train, splits.validation, k, tc, nullptr, &diag);
  posgrad::save_checkpoint(model, o.out);
  std::cout << kind.name() << ": validation auc " << diag.best_validation_auc << " (epoch "
            << diag.best_epoch + 1 << "/" << diag.validation_auc.size() << "), checkpoint "
            << o.out << "\n";
}

// ---- eval --------------------------------------------------------------------

struct EvalOpts {
  std::string model, data, out, curve_out;
  std::uint64_t probes = 10000;
};

void cmd_eval(const EvalOpts& o) {
  const posgrad::TrainedModel model = posgrad::load_checkpoint(o.model);
  const std::vector<posgrad::Exposure> data =
      posgrad::flatten(posgrad::import_jsonl(o.data));
  const std::size_t k = static_cast<std::size_t>(model.k);

  const posgrad::PositionCurve gt = posgrad::empirical_curve(data, k);
  const std::vector<double> gt_rel = posgrad::relative_curve(gt);
  const std::vector<double> preds = posgrad::predict_batch(model, data);
  const std::span<const posgrad::Exposure> probe_span(
      data.data(), std::min<std::size_t>(o.probes, data.size()));
  const double gradient = posgrad::position_gradient(model, probe_span);

  posgrad::MetricsReport report;
  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
  report.auc = posgrad::auc(labels, preds);
  report.curve = posgrad::value_curve(data, preds, k);
  report.relative_curve = posgrad::relative_curve(report.curve);
  const posgrad::EstimationError err =
      posgrad::estimation_error(report.relative_curve, gt_rel);
  report.estimation_error_sq = err.sum_sq;
  report.estimation_error_maxabs = err.max_abs;
  report.overestimation_ratio = posgrad::overestimation_ratio(report.curve, gt);
  report.position_gradient = gradient;

  posgrad::save_json(posgrad::metrics_to_json(report), o.out);
  if (!o.curve_out.empty()) posgrad::write_curve_csv(report.curve, o.curve_out);
  std::cout << "auc " << report.auc << "  overestimation_ratio " << report.overestimation_ratio
            << "  position_gradient " << report.position_gradient << "\n";
}

// ---- fuse --------------------------------------------------------------------

struct FuseOpts {
  std::string pg, pa, pu, out;
};

void cmd_fuse(const FuseOpts& o) {
  const posgrad::PositionCurve p_g = posgrad::read_curve_csv(o.pg);
  const posgrad::PositionCurve p_a = posgrad::read_curve_csv(o.pa);
  const posgrad::PositionCurve p_u =
      o.pu.empty() ? posgrad::approx_unaware_curve(p_a) : posgrad::read_curve_csv(o.pu);
  const posgrad::FusionResult res = posgrad::epsilon_closed_form(p_g, p_a, p_u);
  posgrad::save_json(posgrad::fusion_to_json(res), o.out);
  std::cout << "alpha " << res.alpha << "  randomization_rate " << res.randomization_rate
            << (res.degenerate ? "  (degenerate fit)" : "") << "\n";
}

// ---- grid-eps ------------------------------------------------------------------

struct GridOpts {
  std::string aware, unaware, data, out;
  double step = 0.1;
};

void cmd_grid(const GridOpts& o) {
  const posgrad::TrainedModel aware = posgrad::load_checkpoint(o.aware);
  const posgrad::TrainedModel unaware = posgrad::load_checkpoint(o.unaware);
  const std::vector<posgrad::Exposure> data =
      posgrad::flatten(posgrad::import_jsonl(o.data));
  const posgrad::GridSearchResult res =
      posgrad::grid_search_alpha(aware, unaware, data, o.step);
  if (!o.out.empty()) {
    std::string text = "alpha,auc\n";
    for (const auto& [alpha, score] : res.grid) {
      text += posgrad::fmt_double(alpha) + "," + posgrad::fmt_double(score) + "\n";
    }
    posgrad::save_text(o.out, text);
  }
  std::cout << "best alpha " << res.alpha << "  auc " << res.auc << "\n";
}

// ---- repro-table1 ---------------------------------------------------------------

void cmd_table1(const std::string& out) {
  const posgrad::Table1 t = posgrad::repro_table1();
  std::printf("%-16s %9s %9s %11s\n", "model", "loss_emp", "loss_reg", "loss_total");
  std::printf("%-16s %9.4f %9.4f %11.4f\n", "ground-truth", t.ground_truth.loss_emp,
              t.ground_truth.loss_reg, t.ground_truth.total);
  std::printf("%-16s %9.4f %9.4f %11.4f\n", "overestimation", t.overestimation.loss_emp,
              t.overestimation.loss_reg, t.overestimation.total);
  if (!out.empty()) {
    nlohmann::ordered_json j;
    const auto row = [](const posgrad::LinearLosses& l) {
      nlohmann::ordered_json r;
      r["loss_emp"] = l.loss_emp;
      r["loss_reg"] = l.loss_reg;
      r["total"] = l.total;
      return r;
    };
    j["ground_truth"] = row(t.ground_truth);
    j["overestimation"] = row(t.overestimation);
    posgrad::save_json(j, out);
  }
}

// ---- sweep-l2 -------------------------------------------------------------------

struct SweepOpts {
  CommonOpts common;
  std::vector<double> lambdas{1e-5, 1e-4, 1e-3};
  std::string out;
};

void cmd_sweep(const SweepOpts& o) {
  const posgrad::ExperimentConfig cfg =
      load_experiment_config(o.common.config, o.common.overrides);
  posgrad::validate_config(cfg);
  const posgrad::L2SweepResult res = posgrad::l2_sweep(
      o.lambdas, cfg.gen, cfg.random_users, cfg.train, cfg.seeds);

  namespace fs = std::filesystem;
  fs::create_directories(o.out);
  std::string csv = "lambda,seed,ratio\n";
  for (const posgrad::L2SweepRow& row : res.rows) {
    csv += posgrad::fmt_double(row.lambda) + "," + std::to_string(row.seed) + "," +
           posgrad::fmt_double(row.ratio) + "\n";
  }
  posgrad::save_text((fs::path(o.out) / "sweep.csv").string(), csv);
  nlohmann::ordered_json j;
  j["lambdas"] = res.lambdas;
  j["mean_ratios"] = res.mean_ratios;
  posgrad::save_json(j, (fs::path(o.out) / "sweep.json").string());

  for (std::size_t i = 0; i < res.lambdas.size(); ++i) {
    std::cout << "lambda " << res.lambdas[i] << ": mean overestimation ratio "
              << res.mean_ratios[i] << "\n";
  }
}

// ---- run / emit-plots -------------------------------------------------------------

struct RunOpts {
  CommonOpts common;
  std::string out;
  std::vector<std::uint64_t> seeds;
  bool deterministic = false;
};

void cmd_run(const RunOpts& o) {
  posgrad::ExperimentConfig cfg = load_experiment_config(o.common.config, o.common.overrides);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.deterministic) cfg.deterministic = true;
  posgrad::run_pipeline(cfg, &std::cout);
  std::cout << "run complete: " << cfg.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic position-bias laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(posgrad::kVersion));

  GenOpts gen_opts;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic click dataset (JSONL)");
  add_config_options(gen, gen_opts.common);
  gen->add_option("--out", gen_opts.out, "output JSONL path")->required();
  gen->add_option("--seed", gen_opts.seed, "generator master seed");
  gen->add_option("--traffic", gen_opts.traffic, "RS (ranked) or RANDOM");
  gen->add_option("--users", gen_opts.users, "number of users (overrides n_users)");

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train one model kind on a JSONL dataset");
  add_config_options(train, train_opts.common);
  train->add_option("--data", train_opts.data, "training dataset (JSONL)")->required();
  train->add_option("--kind", train_opts.kind_text, "BASE, ST_PSF, PAL or GI(<rate>)");
  train->add_option("--out", train_opts.out, "checkpoint output path (JSON)")->required();
  train->add_option("--seed", train_opts.seed, "training seed");

  EvalOpts eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--model", eval_opts.model, "checkpoint path")->required();
  eval->add_option("--data", eval_opts.data, "evaluation dataset (JSONL)")->required();
  eval->add_option("--out", eval_opts.out, "metrics output path (JSON)")->required();
  eval->add_option("--curve-out", eval_opts.curve_out, "also write the serve curve CSV");
  eval->add_option("--probes", eval_opts.probes, "probe exposures for the position gradient");

  FuseOpts fuse_opts;
  CLI::App* fuse = app.add_subcommand(
      "fuse", "closed-form fusing weight from three curve CSVs (position,value,count)");
  fuse->add_option("--pg", fuse_opts.pg, "ground-truth curve CSV")->required();
  fuse->add_option("--pa", fuse_opts.pa, "position-aware model curve CSV")->required();
  fuse->add_option("--pu", fuse_opts.pu,
                   "position-unaware curve CSV (default: mean of --pa)");
  fuse->add_option("--out", fuse_opts.out, "fusion result output path (JSON)")->required();

  GridOpts grid_opts;
  CLI::App* grid = app.add_subcommand("grid-eps", "grid-search the fusing weight by AUC");
  grid->add_option("--aware", grid_opts.aware, "position-aware checkpoint")->required();
  grid->add_option("--unaware", grid_opts.unaware, "position-unaware checkpoint")->required();
  grid->add_option("--data", grid_opts.data, "validation dataset (JSONL)")->required();
  grid->add_option("--step", grid_opts.step, "grid step in (0,1]");
  grid->add_option("--out", grid_opts.out, "alpha,auc grid CSV output path");

  std::string table1_out;
  CLI::App* table1 =
      app.add_subcommand("repro-table1", "print the linear overestimation example");
  table1->add_option("--out", table1_out, "also write the table as JSON");

  SweepOpts sweep_opts;
  CLI::App* sweep =
      app.add_subcommand("sweep-l2", "overestimation ratio across L2 coefficients");
  add_config_options(sweep, sweep_opts.common);
  sweep->add_option("--lambdas", sweep_opts.lambdas, "L2 coefficients to sweep");
  sweep->add_option("--out", sweep_opts.out, "output directory")->required();

  RunOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "full experiment: generate, train, fuse, evaluate");
  add_config_options(run, run_opts.common);
  run->add_option("--out", run_opts.out, "output directory (overrides config)");
  run->add_option("--seed", run_opts.seeds, "experiment seed (repeatable; overrides config)");
  run->add_flag("--deterministic", run_opts.deterministic,
                "force deterministic single-threaded execution");

  std::string plots_run_dir;
  CLI::App* plots = app.add_subcommand("emit-plots", "flatten run artifacts into plot CSVs");
  plots->add_option("--run", plots_run_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) cmd_gen(gen_opts);
    if (train->parsed()) cmd_train(train_opts);
    if (eval->parsed()) cmd_eval(eval_opts);
    if (fuse->parsed()) cmd_fuse(fuse_opts);
    if (grid->parsed()) cmd_grid(grid_opts);
    if (table1->parsed()) cmd_table1(table1_out);
    if (sweep->parsed()) cmd_sweep(sweep_opts);
    if (run->parsed()) cmd_run(run_opts);
    if (plots->parsed()) posgrad::emit_plot_data(plots_run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
