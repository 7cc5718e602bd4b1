// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/checkpoint.hpp"
#include "prunelab/exp/config.hpp"
#include "prunelab/prune/engine.hpp"

namespace prunelab {

/// Output layout rooted at one directory:
///   base/     cached fully trained starting checkpoints
///   runs/     one JSON record per experiment
///   reports/  CSV and SVG summaries
struct RunPaths {
  std::filesystem::path root;

  explicit RunPaths(std::string out_root) : root(std::move(out_root)) {}

  std::filesystem::path base_dir() const { return root / "base"; }
  std::filesystem::path runs_dir() const { return root / "runs"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }

  void ensure() const {
    std::filesystem::create_directories(base_dir());
    std::filesystem::create_directories(runs_dir());
    std::filesystem::create_directories(reports_dir());
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string &s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex8(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0')
     << static_cast<std::uint32_t>(h ^ (h >> 32));
  return os.str();
}

/// Deterministic scoring batches: the leading slice of the unshuffled
/// training set, so every regime scores against identical data.
inline std::vector<Batch> scoring_batches(const Dataset &train, int batch_size,
                                          int eval_batches) {
  if (eval_batches < 1)
    throw ConfigError("scoring: eval_batches must be positive");
  auto all = make_batches(train, batch_size, 0, 0, /*shuffle=*/false);
  if (static_cast<int>(all.size()) > eval_batches)
    all.resize(static_cast<std::size_t>(eval_batches));
  return all;
}

} // namespace detail

/// Identity of a trained starting point.  Anything that changes the base
/// weights participates; pruning settings do not, so every regime sharing a
/// (model, dataset, seed, trainer) triple reuses one checkpoint.
inline std::string base_id(const ExperimentConfig &cfg) {
  nlohmann::json js{{"model", cfg.model},
                    {"dataset", cfg.dataset.to_json()},
                    {"split",
                     {{"train", cfg.split.train},
                      {"val", cfg.split.val},
                      {"test", cfg.split.test},
                      {"seed", cfg.split.seed}}},
                    {"base_train", cfg.base_train.to_json()},
                    {"seed", cfg.seed}};
  std::ostringstream os;
  os << cfg.model << "-" << cfg.dataset.name << "-s" << cfg.seed << "-"
     << detail::hex8(detail::fnv1a(js.dump()));
  return os.str();
}

inline ScoreMap compute_scores(Network &net, CriterionKind kind,
                               Granularity gran,
                               const std::vector<Batch> &batches) {
  switch (kind) {
  case CriterionKind::magnitude_l1:
    return magnitude_scores(net, MagnitudeNorm::l1, gran);
  case CriterionKind::magnitude_l2:
    return magnitude_scores(net, MagnitudeNorm::l2, gran);
  case CriterionKind::taylor:
    return taylor_scores(net, batches, gran);
  case CriterionKind::obd:
    return obd_scores(net, batches, gran, HessianMode::fisher);
  }
  throw ConfigError("compute_scores: unknown criterion");
}

struct SplitData {
  Dataset train, val, test;
};

inline SplitData load_split(const ExperimentConfig &cfg) {
  Dataset all = build_dataset(cfg.dataset);
  Splits sp = split(all, cfg.split);
  return {std::move(sp.train), std::move(sp.val), std::move(sp.test)};
}

/// Returns the fully trained starting network, training and caching it under
/// base/ on first use.  Epochs spent here never count against any pruning
/// budget.  `trained_epochs` reports fresh training work (0 on cache hits).
inline Network prepare_base(const ExperimentConfig &cfg, const SplitData &data,
                            const RunPaths &paths, int *trained_epochs = nullptr,
                            std::ostream *log = nullptr) {
  paths.ensure();
  const std::filesystem::path file =
      paths.base_dir() / (base_id(cfg) + ".prlb");
  if (trained_epochs)
    *trained_epochs = 0;
  if (std::filesystem::exists(file)) {
    Checkpoint ck = CheckpointCodec::load_file(file.string());
    if (log)
      *log << "[base] cached " << file.filename().string() << "\n";
    return std::move(ck.net);
  }
  const Dataset &d = data.train;
  if (d.inputs.shape.size() < 2)
    throw ConfigError("prepare_base: dataset inputs must be batched");
  const std::vector<int> in_shape(d.inputs.shape.begin() + 1,
                                  d.inputs.shape.end());
  Network net = build_model(cfg.model, in_shape, d.classes);
  net.init(cfg.seed);

  FinetuneConfig ft;
  ft.sgd = cfg.base_train.sgd();
  ft.stop = RetrainPolicy::plateau(cfg.base_train.patience,
                                   cfg.base_train.min_delta);
  ft.max_epochs = cfg.base_train.max_epochs;
  ft.metric = Metric::val_accuracy;
  ft.seed = Rng::mix(cfg.seed, 0xb45e);
  FinetuneResult res = finetune(net, nullptr, data.train, data.val, ft);
  if (trained_epochs)
    *trained_epochs = res.epochs_used;
  if (log)
    *log << "[base] trained " << res.epochs_used << " epochs, best val "
         << res.best_metric << " -> " << file.filename().string() << "\n";

  CheckpointCodec::save_file(file.string(), net);
  return net;
}

/// Full record of one experiment, shaped for JSON serialization.  Keys named
/// wall_time_seconds are the only nondeterministic content.
struct ExperimentRecord {
  nlohmann::json js;

  std::string dump(int indent = 2) const { return js.dump(indent); }

  void save(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out)
      throw InputError("record: cannot write " + path.string());
    out << dump() << "\n";
  }
};

/// Runs one pruning experiment end to end: obtain the base network, walk the
/// plan (score, select, mask, retrain), and collect metrics after every step.
/// With a finite budget each remaining step is capped at an equal share of
/// the unspent allowance; a budget too small to give every step one epoch is
/// refused up front.
inline ExperimentRecord run_experiment(const ExperimentConfig &cfg,
                                       const RunPaths &paths,
                                       std::ostream *log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  SplitData data = load_split(cfg);
  int base_epochs = 0;
  Network net = prepare_base(cfg, data, paths, &base_epochs, log);

  const bool structured = !cfg.structured_ratios.empty();
  if (structured && cfg.regime.kind != RegimeKind::one_shot)
    throw ConfigError("run_experiment: structured ratios support only the "
                      "one_shot regime");

  EvalResult base_val = evaluate(net, data.val, cfg.base_train.batch_size);
  EvalResult base_test = evaluate(net, data.test, cfg.base_train.batch_size);

  const std::int64_t W = net.prunable_count();
  PruningPlan plan = build_plan(cfg.regime, W);

  const int n_steps = static_cast<int>(plan.steps.size());
  BudgetMeter meter = cfg.budget_epochs < 0
                          ? BudgetMeter::unlimited()
                          : BudgetMeter(cfg.budget_epochs);
  if (!meter.is_unlimited() && meter.cap() / n_steps < 1)
    throw InputError("run_experiment: budget of " +
                     std::to_string(meter.cap()) +
                     " epochs cannot give each of " + std::to_string(n_steps) +
                     " steps one epoch");

  MaskSet mask = MaskSet::all_kept(net);
  Inventory inv = net.inventory();
  StructuredRatioSpec ratio_spec{cfg.structured_ratios};

  nlohmann::json steps_js = nlohmann::json::array();
  bool truncated = false;
  for (int si = 0; si < n_steps; ++si) {
    const PlanStep &step = plan.steps[static_cast<std::size_t>(si)];
    const auto ts0 = std::chrono::steady_clock::now();

    auto batches = detail::scoring_batches(data.train,
                                           cfg.base_train.batch_size,
                                           cfg.eval_batches);
    ScoreMap scores =
        compute_scores(net, cfg.criterion, cfg.granularity, batches);

    if (structured) {
      mask = select_structured(scores, inv, ratio_spec, mask, net);
    } else {
      const std::int64_t add = step.cumulative - mask.pruned_count();
      mask = select_unstructured(scores, add, mask);
    }
    apply_mask(net, mask);

    FinetuneConfig ft;
    ft.sgd = cfg.base_train.sgd();
    ft.sgd.learning_rate = finetune_lr(cfg.base_train.learning_rate);
    ft.stop = step.retrain;
    ft.max_epochs = cfg.base_train.max_epochs;
    if (!meter.is_unlimited()) {
      const std::int64_t cap = meter.remaining() / (n_steps - si);
      ft.max_epochs = static_cast<int>(
          std::min<std::int64_t>(ft.max_epochs, cap));
    }
    ft.metric = Metric::val_accuracy;
    ft.seed = Rng::mix(cfg.seed, 0x57e9 + static_cast<std::uint64_t>(si));
    FinetuneResult res =
        finetune(net, &mask, data.train, data.val, ft, &meter);
    truncated = truncated || res.budget_truncated;

    EvalResult val_ev = evaluate(net, data.val, cfg.base_train.batch_size);
    EvalResult test_ev = evaluate(net, data.test, cfg.base_train.batch_size);
    const auto ts1 = std::chrono::steady_clock::now();

    nlohmann::json sj{
        {"step", si + 1},
        {"target_cumulative", step.cumulative},
        {"achieved_sparsity", sparsity(mask)},
        {"epochs_used", res.epochs_used},
        {"best_epoch", res.best_epoch},
        {"val_metric", val_ev.accuracy},
        {"val_loss", val_ev.loss},
        {"test_metric", test_ev.accuracy},
        {"budget_truncated", res.budget_truncated},
        {"wall_time_seconds",
         std::chrono::duration<double>(ts1 - ts0).count()}};
    steps_js.push_back(std::move(sj));
    if (log)
      *log << "[step " << si + 1 << "/" << n_steps << "] sparsity "
           << std::setprecision(4) << sparsity(mask) << " val "
           << val_ev.accuracy << " epochs " << res.epochs_used << "\n";
  }

  EvalResult final_val = evaluate(net, data.val, cfg.base_train.batch_size);
  EvalResult final_test = evaluate(net, data.test, cfg.base_train.batch_size);
  const auto t1 = std::chrono::steady_clock::now();

  ExperimentRecord rec;
  rec.js = nlohmann::json{
      {"run_id", run_id(cfg)},
      {"config", cfg.to_json()},
      {"base",
       {{"id", base_id(cfg)},
        {"epochs_trained", base_epochs},
        {"val_metric", base_val.accuracy},
        {"val_loss", base_val.loss},
        {"test_metric", base_test.accuracy}}},
      {"plan", plan.to_json()},
      {"steps", steps_js},
      {"final",
       {{"achieved_sparsity", sparsity(mask)},
        {"val_metric", final_val.accuracy},
        {"test_metric", final_test.accuracy},
        {"epochs_total", meter.used()},
        {"budget_cap", meter.cap()},
        {"budget_truncated", truncated}}},
      {"wall_time_seconds", std::chrono::duration<double>(t1 - t0).count()}};
  if (structured) {
    rec.js["structured"] = {
        {"predicted_weight_ratio", overall_ratio(inv, ratio_spec)}};
  }
  return rec;
}

} // namespace prunelab
