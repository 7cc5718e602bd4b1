// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/exp/runner.hpp"

namespace prunelab {

struct SweepSummary {
  int ran = 0;
  int skipped = 0;
  int failed = 0;
  std::vector<std::string> run_files;

  nlohmann::json to_json() const {
    return {{"ran", ran},
            {"skipped", skipped},
            {"failed", failed},
            {"run_files", run_files}};
  }
};

/// Executes a batch of experiments, one JSON record per run under runs/.
/// Reruns are cheap: a config whose record already exists is skipped, so an
/// interrupted sweep resumes by invoking it again.  A failing run leaves a
/// .error.json carcass instead of aborting the batch.
inline SweepSummary run_sweep(const std::vector<ExperimentConfig> &configs,
                              const RunPaths &paths,
                              std::ostream *log = nullptr) {
  paths.ensure();
  SweepSummary sum;
  for (const ExperimentConfig &cfg : configs) {
    const std::string id = run_id(cfg);
    const std::filesystem::path file = paths.runs_dir() / (id + ".json");
    if (std::filesystem::exists(file)) {
      ++sum.skipped;
      sum.run_files.push_back(file.string());
      if (log)
        *log << "[sweep] skip " << id << "\n";
      continue;
    }
    if (log)
      *log << "[sweep] run " << id << "\n";
    try {
      ExperimentRecord rec = run_experiment(cfg, paths, log);
      rec.save(file);
      ++sum.ran;
      sum.run_files.push_back(file.string());
    } catch (const std::exception &e) {
      const std::filesystem::path err =
          paths.runs_dir() / (id + ".error.json");
      std::ofstream out(err);
      out << nlohmann::json{{"run_id", id},
                            {"config", cfg.to_json()},
                            {"error", e.what()}}
                 .dump(2)
          << "\n";
      ++sum.failed;
      if (log)
        *log << "[sweep] FAIL " << id << ": " << e.what() << "\n";
    }
  }
  return sum;
}

/// True when `budget` retraining epochs can give every step of the regime's
/// plan at least one epoch.
inline bool budget_feasible(const RegimeConfig &regime, std::int64_t weights,
                            std::int64_t budget) {
  PruningPlan plan = build_plan(regime, weights);
  return budget / static_cast<std::int64_t>(plan.steps.size()) >= 1;
}

/// Expands one experiment into a (regime x budget) grid.  Infeasible cells
/// are kept in the output with `feasible` false so comparisons can show the
/// hole rather than silently dropping it.
struct BudgetCell {
  ExperimentConfig config;
  bool feasible = true;
};

inline std::vector<BudgetCell>
budget_grid(const ExperimentConfig &base, const std::vector<RegimeConfig> &regimes,
            const std::vector<std::int64_t> &budgets, std::int64_t weights) {
  if (regimes.empty() || budgets.empty())
    throw InputError("budget_grid: regimes and budgets must be non-empty");
  std::vector<BudgetCell> cells;
  for (const RegimeConfig &rg : regimes)
    for (std::int64_t b : budgets) {
      BudgetCell cell;
      cell.config = base;
      cell.config.regime = rg;
      cell.config.budget_epochs = b;
      cell.feasible = budget_feasible(rg, weights, b);
      cells.push_back(std::move(cell));
    }
  return cells;
}

/// Runs the feasible cells of a budget grid (resume-aware) and reports every
/// cell, including the ones that never ran because the budget was too small.
inline nlohmann::json run_budget_grid(const std::vector<BudgetCell> &cells,
                                      const RunPaths &paths,
                                      std::ostream *log = nullptr) {
  std::vector<ExperimentConfig> todo;
  for (const BudgetCell &c : cells)
    if (c.feasible)
      todo.push_back(c.config);
  run_sweep(todo, paths, log);

  nlohmann::json rows = nlohmann::json::array();
  for (const BudgetCell &c : cells) {
    nlohmann::json row{{"run_id", run_id(c.config)},
                       {"regime", regime_name(c.config.regime.kind)},
                       {"budget", c.config.budget_epochs},
                       {"feasible", c.feasible}};
    if (c.feasible) {
      const std::filesystem::path file =
          paths.runs_dir() / (run_id(c.config) + ".json");
      if (std::filesystem::exists(file)) {
        std::ifstream in(file);
        nlohmann::json rec = nlohmann::json::parse(in);
        row["final"] = rec.at("final");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace prunelab
