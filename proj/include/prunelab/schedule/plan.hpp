// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/errors.hpp"

namespace prunelab {

enum class RegimeKind { one_shot, iterative_constant, iterative_geometric, hybrid };

inline const char *regime_name(RegimeKind k) {
  switch (k) {
  case RegimeKind::one_shot:
    return "one_shot";
  case RegimeKind::iterative_constant:
    return "iterative_constant";
  case RegimeKind::iterative_geometric:
    return "iterative_geometric";
  case RegimeKind::hybrid:
    return "hybrid";
  }
  return "?";
}

/// How the retraining phase after a prune step terminates: a fixed epoch
/// count, or plateau patience on the validation metric.
struct RetrainPolicy {
  enum class Mode { fixed, patience };
  Mode mode = Mode::patience;
  int epochs = 1;         // fixed mode
  int patience = 5;       // patience mode
  double min_delta = 0.0; // patience mode dead zone

  static RetrainPolicy fixed(int e) {
    RetrainPolicy p;
    p.mode = Mode::fixed;
    p.epochs = e;
    return p;
  }
  static RetrainPolicy plateau(int patience, double min_delta = 0.0) {
    RetrainPolicy p;
    p.mode = Mode::patience;
    p.patience = patience;
    p.min_delta = min_delta;
    return p;
  }

  std::string describe() const {
    std::ostringstream os;
    if (mode == Mode::fixed)
      os << "fixed(" << epochs << ")";
    else
      os << "patience(" << patience << ", " << min_delta << ")";
    return os.str();
  }

  nlohmann::json to_json() const {
    if (mode == Mode::fixed)
      return {{"mode", "fixed"}, {"epochs", epochs}};
    return {{"mode", "patience"},
            {"patience", patience},
            {"min_delta", min_delta}};
  }
};

/// One prune event: after it, `cumulative` weights are pruned in total.
/// `formula_index` is the exponent n for geometric trajectories (-1 where no
/// closed form applies); `clamped` marks a final step snapped to the target.
struct PlanStep {
  std::int64_t cumulative = 0;
  int formula_index = -1;
  bool clamped = false;
  RetrainPolicy retrain;
};

struct PruningPlan {
  RegimeKind regime = RegimeKind::one_shot;
  std::int64_t total_weights = 0;
  double target = 0.0;
  std::vector<PlanStep> steps;

  std::int64_t final_count() const { return steps.back().cumulative; }

  std::int64_t increment(std::size_t i) const {
    return steps[i].cumulative - (i == 0 ? 0 : steps[i - 1].cumulative);
  }

  nlohmann::json to_json() const {
    nlohmann::json js = nlohmann::json::array();
    for (std::size_t i = 0; i < steps.size(); ++i)
      js.push_back({{"cumulative", steps[i].cumulative},
                    {"increment", increment(i)},
                    {"sparsity", static_cast<double>(steps[i].cumulative) /
                                     static_cast<double>(total_weights)},
                    {"clamped", steps[i].clamped},
                    {"retrain", steps[i].retrain.to_json()}});
    return {{"regime", regime_name(regime)},
            {"total_weights", total_weights},
            {"target", target},
            {"steps", js}};
  }
};

/// Round half away from zero; all prune-count targets use this rule.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

namespace detail {

inline void check_wp(std::int64_t W, double p, const char *who) {
  if (W < 1)
    throw InputError(std::string(who) + ": weight count must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw InputError(std::string(who) +
                     ": target sparsity must lie strictly in (0,1)");
  if (round_half_up(p * static_cast<double>(W)) < 1)
    throw InputError(std::string(who) + ": target prunes nothing (round(p*W)=0)");
}

} // namespace detail

// ============================================================================
// Regime constructors
// ============================================================================

/// Single prune of round(p*W) weights.
inline PruningPlan plan_one_shot(std::int64_t W, double p,
                                 RetrainPolicy retrain) {
  detail::check_wp(W, p, "plan_one_shot");
  PruningPlan plan;
  plan.regime = RegimeKind::one_shot;
  plan.total_weights = W;
  plan.target = p;
  plan.steps.push_back({round_half_up(p * static_cast<double>(W)), 1, false,
                        retrain});
  return plan;
}

/// Equal increments: cumulative after step k is floor(k * round(p*W) / steps),
/// which spreads the remainder so any two increments differ by at most one
/// and the final step lands exactly on round(p*W).
inline PruningPlan plan_constant(std::int64_t W, double p, int steps,
                                 RetrainPolicy retrain) {
  detail::check_wp(W, p, "plan_constant");
  const std::int64_t base = round_half_up(p * static_cast<double>(W));
  if (steps < 1)
    throw InputError("plan_constant: step count must be positive");
  if (steps > base)
    throw InputError("plan_constant: " + std::to_string(steps) +
                     " steps cannot each prune at least one of " +
                     std::to_string(base) + " weights");
  PruningPlan plan;
  plan.regime = RegimeKind::iterative_constant;
  plan.total_weights = W;
  plan.target = p;
  for (int k = 1; k <= steps; ++k)
    plan.steps.push_back(
        {static_cast<std::int64_t>(k) * base / steps, k, false, retrain});
  return plan;
}

/// Geometric decay of the surviving pool: after step n the plan keeps
/// round(W * (1-r)^n) weights.  Runs until the survivors dip to the target,
/// then the final step clamps to exactly round(p*W); r == p degenerates to a
/// single step.  Steps whose rounded survivor count does not move are
/// skipped, so every increment is at least one.
inline PruningPlan plan_geometric(std::int64_t W, double p, double r,
                                  RetrainPolicy retrain) {
  detail::check_wp(W, p, "plan_geometric");
  if (!(r > 0.0))
    throw InputError("plan_geometric: step ratio must be positive");
  if (r > p)
    throw InputError("plan_geometric: step ratio exceeds target sparsity");
  PruningPlan plan;
  plan.regime = RegimeKind::iterative_geometric;
  plan.total_weights = W;
  plan.target = p;
  const std::int64_t final_cum = round_half_up(p * static_cast<double>(W));
  const std::int64_t final_remaining = W - final_cum;
  double decay = 1.0;
  for (int n = 1;; ++n) {
    decay *= 1.0 - r;
    const std::int64_t remaining =
        round_half_up(static_cast<double>(W) * decay);
    if (remaining <= final_remaining) {
      plan.steps.push_back(
          {final_cum, n, remaining != final_remaining, retrain});
      break;
    }
    const std::int64_t cumulative = W - remaining;
    const std::int64_t prev =
        plan.steps.empty() ? 0 : plan.steps.back().cumulative;
    if (cumulative > prev)
      plan.steps.push_back({cumulative, n, false, retrain});
  }
  return plan;
}

/// One-shot jump to round(p_k*W), then geometric steps at ratio `r` over the
/// survivors until the final step clamps to round(p*W).
inline PruningPlan plan_hybrid(std::int64_t W, double p, double p_k, double r,
                               RetrainPolicy oneshot_retrain,
                               RetrainPolicy iter_retrain) {
  detail::check_wp(W, p, "plan_hybrid");
  if (!(p_k > 0.0 && p_k < p))
    throw InputError(
        "plan_hybrid: one-shot fraction must lie strictly in (0, target)");
  if (!(r > 0.0 && r < 1.0))
    throw InputError("plan_hybrid: step ratio must lie in (0,1)");
  PruningPlan plan;
  plan.regime = RegimeKind::hybrid;
  plan.total_weights = W;
  plan.target = p;
  const std::int64_t first = round_half_up(p_k * static_cast<double>(W));
  if (first < 1)
    throw InputError("plan_hybrid: one-shot phase prunes nothing");
  const std::int64_t final_cum = round_half_up(p * static_cast<double>(W));
  const std::int64_t final_remaining = W - final_cum;
  plan.steps.push_back({first, 0, false, oneshot_retrain});
  const std::int64_t R1 = W - first;
  if (R1 == final_remaining) // rounding made p_k and p coincide
    return plan;
  double decay = 1.0;
  for (int m = 1;; ++m) {
    decay *= 1.0 - r;
    const std::int64_t remaining =
        round_half_up(static_cast<double>(R1) * decay);
    if (remaining <= final_remaining) {
      plan.steps.push_back(
          {final_cum, m, remaining != final_remaining, iter_retrain});
      break;
    }
    const std::int64_t cumulative = W - remaining;
    if (cumulative > plan.steps.back().cumulative)
      plan.steps.push_back({cumulative, m, false, iter_retrain});
  }
  return plan;
}

/// Hybrid defaults: jump to 70% of the target, then 10% steps below 0.8
/// target sparsity and 2% steps at or above it; the iterative patience is
/// 1/20 of the one-shot patience (at least 1).
struct HybridDefaults {
  double p_k = 0.0;
  double r = 0.0;
};

inline HybridDefaults hybrid_defaults(double p) {
  HybridDefaults d;
  d.p_k = 0.7 * p;
  d.r = p < 0.8 ? 0.10 : 0.02;
  return d;
}

inline int derived_iter_patience(int oneshot_patience) {
  const int p = oneshot_patience / 20;
  return p < 1 ? 1 : p;
}

// ============================================================================
// Config-level dispatch
// ============================================================================

/// Declarative regime description as it appears in config files.
struct RegimeConfig {
  RegimeKind kind = RegimeKind::one_shot;
  double target = 0.5;
  int steps = 4;                          // iterative_constant
  double ratio = 0.0;                     // geometric/hybrid; 0 derives default
  double oneshot_fraction = 0.0;          // hybrid p_k; 0 derives 0.7*target
  RetrainPolicy retrain;                  // one-shot phase / whole-plan policy
  std::optional<RetrainPolicy> iter_retrain; // iterative steps; derived if unset
};

inline PruningPlan build_plan(const RegimeConfig &cfg, std::int64_t W) {
  switch (cfg.kind) {
  case RegimeKind::one_shot:
    return plan_one_shot(W, cfg.target, cfg.retrain);
  case RegimeKind::iterative_constant: {
    const RetrainPolicy pol = cfg.iter_retrain.value_or(cfg.retrain);
    return plan_constant(W, cfg.target, cfg.steps, pol);
  }
  case RegimeKind::iterative_geometric: {
    const RetrainPolicy pol = cfg.iter_retrain.value_or(cfg.retrain);
    const double r = cfg.ratio > 0.0 ? cfg.ratio : hybrid_defaults(cfg.target).r;
    return plan_geometric(W, cfg.target, r, pol);
  }
  case RegimeKind::hybrid: {
    const HybridDefaults d = hybrid_defaults(cfg.target);
    const double p_k =
        cfg.oneshot_fraction > 0.0 ? cfg.oneshot_fraction : d.p_k;
    const double r = cfg.ratio > 0.0 ? cfg.ratio : d.r;
    RetrainPolicy iter;
    if (cfg.iter_retrain) {
      iter = *cfg.iter_retrain;
    } else {
      iter = cfg.retrain;
      if (iter.mode == RetrainPolicy::Mode::patience)
        iter.patience = derived_iter_patience(iter.patience);
      else
        iter.epochs = std::max(1, iter.epochs / 20);
    }
    return plan_hybrid(W, cfg.target, p_k, r, cfg.retrain, iter);
  }
  }
  throw InputError("build_plan: unknown regime");
}

/// Human-readable step table.
inline std::string describe(const PruningPlan &plan) {
  std::ostringstream os;
  os << "regime " << regime_name(plan.regime) << "  total " << plan.total_weights
     << "  target " << std::fixed << std::setprecision(4) << plan.target
     << "\n";
  os << std::setw(5) << "step" << std::setw(12) << "prune" << std::setw(12)
     << "cumulative" << std::setw(10) << "sparsity" << "  retrain\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    os << std::setw(5) << i + 1 << std::setw(12) << plan.increment(i)
       << std::setw(12) << plan.steps[i].cumulative << std::setw(10)
       << std::setprecision(4)
       << static_cast<double>(plan.steps[i].cumulative) /
              static_cast<double>(plan.total_weights)
       << "  " << plan.steps[i].retrain.describe()
       << (plan.steps[i].clamped ? "  [clamped]" : "") << "\n";
  }
  return os.str();
}

} // namespace prunelab
