// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0
//
// Command-line front end for the pruning laboratory.  Experiments are
// described by hierarchical JSON config files; every subcommand accepts
// repeated --set key.path=value overrides that win over the file.  Results
// land under one output root (--out, or the PRUNELAB_OUT environment
// variable): base/ for cached starting checkpoints, runs/ for per-run
// records, reports/ for CSV tables and SVG charts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prunelab/prunelab.hpp"

namespace fs = std::filesystem;
using namespace prunelab;

namespace {

std::string default_out_root() {
  const char *env = std::getenv("PRUNELAB_OUT");
  return env && *env ? env : "prunelab_out";
}

nlohmann::json load_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("config: cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

/// Applies one "a.b.c=value" override.  Values parse as JSON when possible
/// (numbers, booleans, arrays), otherwise as plain strings, so
/// --set regime.target=0.9 and --set model=cnn_small both do what they say.
void apply_override(nlohmann::json &cfg, const std::string &kv) {
  const std::size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + kv + "' is not key.path=value");
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error &) {
    value = raw;
  }

  nlohmann::json *node = &cfg;
  std::istringstream keys(path);
  std::string key, next;
  std::getline(keys, key, '.');
  while (std::getline(keys, next, '.')) {
    node = &(*node)[key];
    key = next;
  }
  (*node)[key] = std::move(value);
}

ExperimentConfig
resolve_config(const std::string &config_path,
               const std::vector<std::string> &overrides) {
  nlohmann::json js = config_path.empty() ? nlohmann::json::object()
                                          : load_config_file(config_path);
  for (const std::string &kv : overrides)
    apply_override(js, kv);
  return ExperimentConfig::from_json(js);
}

/// Config files for sweeps hold either a single experiment object or an
/// array of them; --seeds replicates every entry across the listed seeds.
std::vector<ExperimentConfig>
resolve_sweep(const std::vector<std::string> &config_paths,
              const std::vector<std::string> &overrides,
              const std::vector<std::uint64_t> &seeds) {
  std::vector<nlohmann::json> raw;
  for (const std::string &path : config_paths) {
    nlohmann::json js = load_config_file(path);
    if (js.is_array())
      for (auto &el : js)
        raw.push_back(el);
    else
      raw.push_back(js);
  }
  std::vector<ExperimentConfig> configs;
  for (nlohmann::json &js : raw) {
    for (const std::string &kv : overrides)
      apply_override(js, kv);
    if (seeds.empty()) {
      configs.push_back(ExperimentConfig::from_json(js));
    } else {
      for (std::uint64_t s : seeds) {
        nlohmann::json with_seed = js;
        with_seed["seed"] = s;
        configs.push_back(ExperimentConfig::from_json(with_seed));
      }
    }
  }
  return configs;
}

RegimeConfig regime_with_kind(const RegimeConfig &base, const std::string &name) {
  RegimeConfig rg = base;
  rg.kind = parse_regime(name);
  return rg;
}

int cmd_train_base(const std::string &out_root, const std::string &config,
                   const std::vector<std::string> &overrides) {
  ExperimentConfig cfg = resolve_config(config, overrides);
  RunPaths paths(out_root);
  SplitData data = load_split(cfg);
  int epochs = 0;
  Network net = prepare_base(cfg, data, paths, &epochs, &std::cout);
  EvalResult val = evaluate(net, data.val, cfg.base_train.batch_size);
  EvalResult test = evaluate(net, data.test, cfg.base_train.batch_size);
  std::cout << "base " << base_id(cfg) << "\n"
            << "  epochs this call " << epochs << "\n"
            << "  val accuracy  " << val.accuracy << "\n"
            << "  test accuracy " << test.accuracy << "\n";
  return 0;
}

int cmd_run(const std::string &out_root, const std::string &config,
            const std::vector<std::string> &overrides) {
  ExperimentConfig cfg = resolve_config(config, overrides);
  RunPaths paths(out_root);
  paths.ensure();
  ExperimentRecord rec = run_experiment(cfg, paths, &std::cout);
  const fs::path file = paths.runs_dir() / (run_id(cfg) + ".json");
  rec.save(file);
  const auto &fin = rec.js.at("final");
  std::cout << "run " << run_id(cfg) << "\n"
            << "  sparsity " << fin.at("achieved_sparsity").get<double>()
            << "  test accuracy " << fin.at("test_metric").get<double>()
            << "  epochs " << fin.at("epochs_total").get<std::int64_t>() << "\n"
            << "  record " << file.string() << "\n";
  return 0;
}

int cmd_sweep(const std::string &out_root,
              const std::vector<std::string> &configs,
              const std::vector<std::string> &overrides,
              const std::vector<std::uint64_t> &seeds) {
  std::vector<ExperimentConfig> cells = resolve_sweep(configs, overrides, seeds);
  RunPaths paths(out_root);
  SweepSummary sum = run_sweep(cells, paths, &std::cout);
  std::cout << "sweep done: " << sum.ran << " ran, " << sum.skipped
            << " skipped, " << sum.failed << " failed\n";
  return sum.failed > 0 ? 1 : 0;
}

int cmd_budget(const std::string &out_root, const std::string &config,
               const std::vector<std::string> &overrides,
               const std::vector<std::string> &regime_names,
               const std::vector<std::int64_t> &budgets) {
  ExperimentConfig cfg = resolve_config(config, overrides);
  std::vector<RegimeConfig> regimes;
  if (regime_names.empty())
    regimes.push_back(cfg.regime);
  else
    for (const std::string &name : regime_names)
      regimes.push_back(regime_with_kind(cfg.regime, name));

  SplitData data = load_split(cfg);
  const std::vector<int> in_shape(data.train.inputs.shape.begin() + 1,
                                  data.train.inputs.shape.end());
  const std::int64_t weights =
      build_model(cfg.model, in_shape, data.train.classes).prunable_count();

  auto cells = budget_grid(cfg, regimes, budgets, weights);
  RunPaths paths(out_root);
  nlohmann::json rows = run_budget_grid(cells, paths, &std::cout);

  const fs::path table = paths.reports_dir() / "budget_table.json";
  std::ofstream out(table);
  out << rows.dump(2) << "\n";
  std::cout << "\n  regime                 budget   feasible   test accuracy\n";
  for (const auto &row : rows) {
    std::ostringstream acc;
    if (row.contains("final"))
      acc << row.at("final").at("test_metric").get<double>();
    else
      acc << "-";
    std::cout << "  " << std::left << std::setw(22)
              << row.at("regime").get<std::string>() << std::right
              << std::setw(7) << row.at("budget").get<std::int64_t>()
              << std::setw(11) << (row.at("feasible").get<bool>() ? "yes" : "no")
              << std::setw(16) << acc.str() << "\n";
  }
  std::cout << "  table " << table.string() << "\n";
  return 0;
}

int cmd_report(const std::string &out_root, const std::string &kind_name) {
  RunPaths paths(out_root);
  paths.ensure();
  const ReportKind kind = parse_report_kind(kind_name);
  auto records = load_run_records(paths);
  auto rows = collect_rows(records);
  const fs::path csv = paths.reports_dir() / (kind_name + ".csv");
  const fs::path svg = paths.reports_dir() / (kind_name + ".svg");
  write_report(kind, rows, csv, svg);
  std::cout << "report " << kind_name << " over " << records.size()
            << " runs\n  " << csv.string() << "\n  " << svg.string() << "\n";
  return 0;
}

int cmd_plan(const std::string &config,
             const std::vector<std::string> &overrides, std::int64_t weights) {
  ExperimentConfig cfg = resolve_config(config, overrides);
  if (weights <= 0) {
    // derive the prunable pool from the configured model and dataset
    SplitData data = load_split(cfg);
    const std::vector<int> in_shape(data.train.inputs.shape.begin() + 1,
                                    data.train.inputs.shape.end());
    weights =
        build_model(cfg.model, in_shape, data.train.classes).prunable_count();
  }
  PruningPlan plan = build_plan(cfg.regime, weights);
  std::cout << describe(plan);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"pruning-regime laboratory"};
  app.require_subcommand(1);

  std::string out_root = default_out_root();
  app.add_option("--out", out_root,
                 "output root (default: $PRUNELAB_OUT or ./prunelab_out)");

  std::string config;
  std::vector<std::string> config_list;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> regime_names;
  std::vector<std::int64_t> budgets;
  std::string report_kind = "ratio_curve";
  std::int64_t plan_weights = 0;

  CLI::App *train = app.add_subcommand(
      "train-base", "train and cache the starting checkpoint");
  train->add_option("--config", config, "experiment config JSON");
  train->add_option("--set", overrides, "override key.path=value");

  CLI::App *run =
      app.add_subcommand("run", "run one pruning experiment end to end");
  run->add_option("--config", config, "experiment config JSON");
  run->add_option("--set", overrides, "override key.path=value");

  CLI::App *sweep = app.add_subcommand(
      "sweep", "run many experiments, resuming past finished ones");
  sweep->add_option("configs", config_list, "config JSON files (object or array)")
      ->required();
  sweep->add_option("--set", overrides, "override applied to every cell");
  sweep->add_option("--seeds", seeds, "replicate each config across seeds");

  CLI::App *budget = app.add_subcommand(
      "budget", "compare regimes under shared retraining-epoch budgets");
  budget->add_option("--config", config, "experiment config JSON");
  budget->add_option("--set", overrides, "override key.path=value");
  budget->add_option("--regimes", regime_names,
                     "regime kinds to compare (default: the config's)");
  budget->add_option("--budgets", budgets, "epoch budgets")->required();

  CLI::App *report = app.add_subcommand(
      "report", "aggregate run records into CSV and an SVG chart");
  report->add_option("--kind", report_kind,
                     "ratio_curve | budget_curve | criteria_best");

  CLI::App *plan =
      app.add_subcommand("plan", "print a regime's step table without running");
  plan->add_option("--config", config, "experiment config JSON");
  plan->add_option("--set", overrides, "override key.path=value");
  plan->add_option("--weights", plan_weights,
                   "prunable weight count (default: derive from the model)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train_base(out_root, config, overrides);
    if (run->parsed())
      return cmd_run(out_root, config, overrides);
    if (sweep->parsed())
      return cmd_sweep(out_root, config_list, overrides, seeds);
    if (budget->parsed())
      return cmd_budget(out_root, config, overrides, regime_names, budgets);
    if (report->parsed())
      return cmd_report(out_root, report_kind);
    if (plan->parsed())
      return cmd_plan(config, overrides, plan_weights);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
