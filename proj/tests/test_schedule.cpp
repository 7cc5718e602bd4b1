// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#include "catch2/catch_amalgamated.hpp"
#include "prunelab/prunelab.hpp"

#include <cmath>
#include <cstdint>

using namespace prunelab;

namespace {

void check_plan_invariants(const PruningPlan &plan) {
  REQUIRE_FALSE(plan.steps.empty());
  const std::int64_t final_cum =
      round_half_up(plan.target * static_cast<double>(plan.total_weights));
  REQUIRE(plan.final_count() == final_cum);
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    REQUIRE(plan.steps[i].cumulative > prev); // strictly more each step
    REQUIRE(plan.increment(i) >= 1);
    prev = plan.steps[i].cumulative;
  }
  REQUIRE(prev <= plan.total_weights);
}

} // namespace

// ============================================================================
// Rounding
// ============================================================================

TEST_CASE("round_half_up rounds halves away from the floor") {
  REQUIRE(round_half_up(0.4) == 0);
  REQUIRE(round_half_up(0.5) == 1);
  REQUIRE(round_half_up(1.5) == 2);
  REQUIRE(round_half_up(2.4999) == 2);
  REQUIRE(round_half_up(2.5) == 3);
  REQUIRE(round_half_up(700.0) == 700);
}

// ============================================================================
// One shot
// ============================================================================

TEST_CASE("one-shot plan prunes round(p W) in a single step") {
  PruningPlan plan = plan_one_shot(1000, 0.7, RetrainPolicy::plateau(4));
  REQUIRE(plan.steps.size() == 1);
  REQUIRE(plan.final_count() == 700);
  REQUIRE(plan.regime == RegimeKind::one_shot);
  check_plan_invariants(plan);

  PruningPlan half = plan_one_shot(10, 0.75, RetrainPolicy::fixed(2));
  REQUIRE(half.final_count() == 8); // round(7.5) rounds up
  REQUIRE(half.steps[0].retrain.mode == RetrainPolicy::Mode::fixed);
}

TEST_CASE("one-shot plan validates its inputs") {
  REQUIRE_THROWS_AS(plan_one_shot(0, 0.5, RetrainPolicy::fixed(1)), InputError);
  REQUIRE_THROWS_AS(plan_one_shot(100, 0.0, RetrainPolicy::fixed(1)),
                    InputError);
  REQUIRE_THROWS_AS(plan_one_shot(100, 1.0, RetrainPolicy::fixed(1)),
                    InputError);
  // round(10 * 0.04) = 0: nothing to prune
  REQUIRE_THROWS_AS(plan_one_shot(10, 0.04, RetrainPolicy::fixed(1)),
                    InputError);
}

// ============================================================================
// Iterative constant
// ============================================================================

TEST_CASE("constant plan spreads 700 over 3 steps as 233 233 234") {
  PruningPlan plan = plan_constant(1000, 0.7, 3, RetrainPolicy::plateau(2));
  REQUIRE(plan.steps.size() == 3);
  REQUIRE(plan.increment(0) == 233);
  REQUIRE(plan.increment(1) == 233);
  REQUIRE(plan.increment(2) == 234);
  REQUIRE(plan.final_count() == 700);
  check_plan_invariants(plan);
}

TEST_CASE("constant plan increments never differ by more than one") {
  PruningPlan plan = plan_constant(1000, 0.7, 6, RetrainPolicy::plateau(2));
  std::int64_t lo = plan.increment(0), hi = plan.increment(0);
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    lo = std::min(lo, plan.increment(i));
    hi = std::max(hi, plan.increment(i));
  }
  REQUIRE(hi - lo <= 1);
  REQUIRE(plan.final_count() == 700);
}

TEST_CASE("constant plan properties hold across random settings") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t W = 1 + static_cast<std::int64_t>(rng.uniform_int(5000));
    const double p = rng.uniform(0.01, 0.99);
    const std::int64_t base = round_half_up(p * static_cast<double>(W));
    if (base < 1)
      continue;
    const int steps =
        1 + static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(std::min<std::int64_t>(base, 12))));
    PruningPlan plan = plan_constant(W, p, steps, RetrainPolicy::fixed(1));
    REQUIRE(plan.steps.size() == static_cast<std::size_t>(steps));
    check_plan_invariants(plan);
    std::int64_t lo = plan.increment(0), hi = plan.increment(0);
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      lo = std::min(lo, plan.increment(i));
      hi = std::max(hi, plan.increment(i));
    }
    REQUIRE(hi - lo <= 1);
  }
}

TEST_CASE("constant plan validates the step count") {
  REQUIRE_THROWS_AS(plan_constant(1000, 0.7, 0, RetrainPolicy::fixed(1)),
                    InputError);
  // 5 steps cannot each prune one of round(0.4*10)=4 weights
  REQUIRE_THROWS_AS(plan_constant(10, 0.4, 5, RetrainPolicy::fixed(1)),
                    InputError);
  PruningPlan edge = plan_constant(10, 0.4, 4, RetrainPolicy::fixed(1));
  REQUIRE(edge.steps.size() == 4);
  check_plan_invariants(edge);
}

// ============================================================================
// Iterative geometric
// ============================================================================

TEST_CASE("geometric plan at ratio 0.2 reaches 0.8 sparsity in 8 steps") {
  PruningPlan plan = plan_geometric(1000, 0.8, 0.2, RetrainPolicy::plateau(2));
  REQUIRE(plan.steps.size() == 8);
  REQUIRE(plan.final_count() == 800);
  REQUIRE(plan.steps.back().clamped);
  // survivors follow round(W (1-r)^n) until the clamp
  REQUIRE(plan.steps[0].cumulative == 200);
  REQUIRE(plan.steps[1].cumulative == 360);
  REQUIRE(plan.steps[2].cumulative == 488);
  REQUIRE(plan.steps[6].cumulative == 790);
  check_plan_invariants(plan);
}

TEST_CASE("geometric trajectory matches the decay formula until the clamp") {
  PruningPlan plan = plan_geometric(5000, 0.9, 0.3, RetrainPolicy::fixed(1));
  for (const PlanStep &s : plan.steps) {
    if (s.clamped)
      continue;
    const std::int64_t remaining = round_half_up(
        5000.0 * std::pow(0.7, static_cast<double>(s.formula_index)));
    REQUIRE(s.cumulative == 5000 - remaining);
  }
  check_plan_invariants(plan);
}

TEST_CASE("geometric ratio equal to target degenerates to one step") {
  PruningPlan plan = plan_geometric(1000, 0.5, 0.5, RetrainPolicy::fixed(1));
  REQUIRE(plan.steps.size() == 1);
  REQUIRE(plan.final_count() == 500);
  REQUIRE_FALSE(plan.steps[0].clamped);
}

TEST_CASE("geometric skips rounding plateaus so every step prunes") {
  PruningPlan plan = plan_geometric(100, 0.5, 0.004, RetrainPolicy::fixed(1));
  check_plan_invariants(plan); // increments >= 1 despite tiny ratio
}

TEST_CASE("geometric plan validates the ratio") {
  REQUIRE_THROWS_AS(plan_geometric(1000, 0.5, 0.6, RetrainPolicy::fixed(1)),
                    InputError);
  REQUIRE_THROWS_AS(plan_geometric(1000, 0.5, 0.0, RetrainPolicy::fixed(1)),
                    InputError);
  REQUIRE_THROWS_AS(plan_geometric(1000, 0.5, -0.1, RetrainPolicy::fixed(1)),
                    InputError);
}

TEST_CASE("geometric plan properties hold across random settings") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t W =
        20 + static_cast<std::int64_t>(rng.uniform_int(20000));
    const double p = rng.uniform(0.05, 0.99);
    if (round_half_up(p * static_cast<double>(W)) < 1)
      continue;
    const double r = rng.uniform(0.01, p);
    PruningPlan plan = plan_geometric(W, p, r, RetrainPolicy::fixed(1));
    check_plan_invariants(plan);
  }
}

// ============================================================================
// Hybrid
// ============================================================================

TEST_CASE("hybrid plan jumps once then decays to the exact target") {
  PruningPlan plan = plan_hybrid(10000, 0.7, 0.5, 0.01842,
                                 RetrainPolicy::plateau(20),
                                 RetrainPolicy::plateau(1));
  REQUIRE(plan.final_count() == 7000);
  REQUIRE(plan.steps[0].cumulative == 5000);
  REQUIRE(plan.steps[0].retrain.patience == 20);
  for (std::size_t i = 1; i < plan.steps.size(); ++i)
    REQUIRE(plan.steps[i].retrain.patience == 1);
  REQUIRE(plan.steps.size() > 2);
  check_plan_invariants(plan);

  // the decay acts on the survivors of the jump
  const PlanStep &second = plan.steps[1];
  const std::int64_t R1 = 5000;
  REQUIRE(second.cumulative ==
          10000 - round_half_up(R1 * (1.0 - 0.01842)));
}

TEST_CASE("hybrid defaults derive from the target") {
  HybridDefaults lo = hybrid_defaults(0.5);
  REQUIRE(lo.p_k == Catch::Approx(0.35));
  REQUIRE(lo.r == Catch::Approx(0.10));
  HybridDefaults hi = hybrid_defaults(0.9);
  REQUIRE(hi.p_k == Catch::Approx(0.63));
  REQUIRE(hi.r == Catch::Approx(0.02));

  REQUIRE(derived_iter_patience(100) == 5);
  REQUIRE(derived_iter_patience(40) == 2);
  REQUIRE(derived_iter_patience(19) == 1);
  REQUIRE(derived_iter_patience(1) == 1);
}

TEST_CASE("hybrid collapses to one step when rounding meets the target") {
  PruningPlan plan = plan_hybrid(10, 0.5, 0.45, 0.1, RetrainPolicy::fixed(3),
                                 RetrainPolicy::fixed(1));
  // round(4.5) = 5 = round(5.0): the jump already lands on the target
  REQUIRE(plan.steps.size() == 1);
  REQUIRE(plan.final_count() == 5);
}

TEST_CASE("hybrid plan validates the one-shot fraction") {
  REQUIRE_THROWS_AS(plan_hybrid(1000, 0.5, 0.5, 0.1, RetrainPolicy::fixed(1),
                                RetrainPolicy::fixed(1)),
                    InputError);
  REQUIRE_THROWS_AS(plan_hybrid(1000, 0.5, 0.0, 0.1, RetrainPolicy::fixed(1),
                                RetrainPolicy::fixed(1)),
                    InputError);
  REQUIRE_THROWS_AS(plan_hybrid(1000, 0.5, 0.3, 1.0, RetrainPolicy::fixed(1),
                                RetrainPolicy::fixed(1)),
                    InputError);
}

// ============================================================================
// Config-level dispatch
// ============================================================================

TEST_CASE("build_plan dispatches every regime kind") {
  RegimeConfig cfg;
  cfg.target = 0.6;
  cfg.retrain = RetrainPolicy::plateau(20);

  cfg.kind = RegimeKind::one_shot;
  REQUIRE(build_plan(cfg, 1000).steps.size() == 1);

  cfg.kind = RegimeKind::iterative_constant;
  cfg.steps = 5;
  PruningPlan c = build_plan(cfg, 1000);
  REQUIRE(c.steps.size() == 5);
  REQUIRE(c.steps[0].retrain.patience == 20);

  cfg.kind = RegimeKind::iterative_geometric;
  cfg.ratio = 0.15;
  PruningPlan g = build_plan(cfg, 1000);
  REQUIRE(g.regime == RegimeKind::iterative_geometric);
  REQUIRE(g.final_count() == 600);

  cfg.kind = RegimeKind::hybrid;
  cfg.ratio = 0.0;            // derive 0.1 (target < 0.8)
  cfg.oneshot_fraction = 0.0; // derive 0.42
  PruningPlan h = build_plan(cfg, 1000);
  REQUIRE(h.final_count() == 600);
  REQUIRE(h.steps[0].cumulative == 420);
  REQUIRE(h.steps[0].retrain.patience == 20);
  REQUIRE(h.steps[1].retrain.patience == 1); // 20/20
}

TEST_CASE("build_plan honors an explicit iterative retrain policy") {
  RegimeConfig cfg;
  cfg.kind = RegimeKind::hybrid;
  cfg.target = 0.6;
  cfg.retrain = RetrainPolicy::plateau(40);
  cfg.iter_retrain = RetrainPolicy::fixed(7);
  PruningPlan h = build_plan(cfg, 1000);
  REQUIRE(h.steps[0].retrain.mode == RetrainPolicy::Mode::patience);
  REQUIRE(h.steps[1].retrain.mode == RetrainPolicy::Mode::fixed);
  REQUIRE(h.steps[1].retrain.epochs == 7);
}

TEST_CASE("plan json and description expose the step table") {
  PruningPlan plan = plan_constant(100, 0.5, 2, RetrainPolicy::plateau(3));
  nlohmann::json js = plan.to_json();
  REQUIRE(js.at("regime") == "iterative_constant");
  REQUIRE(js.at("steps").size() == 2);
  REQUIRE(js.at("steps")[0].at("cumulative") == 25);
  REQUIRE(js.at("steps")[1].at("increment") == 25);
  REQUIRE(js.at("steps")[1].at("sparsity") == Catch::Approx(0.5));

  const std::string text = describe(plan);
  REQUIRE(text.find("iterative_constant") != std::string::npos);
  REQUIRE(text.find("patience(3, 0)") != std::string::npos);
}
