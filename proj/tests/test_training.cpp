// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#include "catch2/catch_amalgamated.hpp"
#include "prunelab/prunelab.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace prunelab;

namespace {

// Straight-line reimplementation of the plateau rule for cross-checking.
struct StopRef {
  int stop_epoch = -1; // 1-based epoch of the stop signal, -1 if none
  double best = 0.0;
};

StopRef reference_stop(const std::vector<double> &ms, int patience,
                       double min_delta, bool higher) {
  StopRef ref;
  ref.best = higher ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  int counter = 0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double m = ms[i];
    if (higher ? m > ref.best : m < ref.best) {
      ref.best = m;
      counter = 0;
    } else if (higher ? m < ref.best - min_delta : m > ref.best + min_delta) {
      ++counter;
    }
    if (counter >= patience) {
      ref.stop_epoch = static_cast<int>(i) + 1;
      break;
    }
  }
  return ref;
}

Network make_net(std::uint64_t seed) {
  Network net = NetworkBuilder({2})
                    .dense(16)
                    .relu()
                    .dense(3)
                    .build(seed);
  return net;
}

struct Problem {
  Dataset train;
  Dataset val;
};

Problem make_problem() {
  Dataset ds = gen_synthetic(SyntheticKind::gaussians, 120, 3, 0.05, 11);
  Splits sp = split(ds, SplitSpec{0.8, 0.2, 0.0, 5});
  return {sp.train, sp.val};
}

} // namespace

// ============================================================================
// EarlyStopper
// ============================================================================

TEST_CASE("stopper flags the classic regression trace at patience two") {
  EarlyStopper es(2, 0.0, false);
  REQUIRE_FALSE(es.observe(1.0));
  REQUIRE_FALSE(es.observe(0.9));
  REQUIRE_FALSE(es.observe(0.95));
  REQUIRE(es.observe(0.96));
  REQUIRE(es.stopped());
  REQUIRE(es.best() == 0.9);
  REQUIRE(es.counter() == 2);
}

TEST_CASE("min_delta opens a dead zone that neither improves nor counts") {
  EarlyStopper es(2, 0.05, false);
  REQUIRE_FALSE(es.observe(1.0));
  REQUIRE_FALSE(es.observe(1.03)); // inside the zone
  REQUIRE(es.counter() == 0);
  REQUIRE_FALSE(es.observe(1.05)); // boundary still inside
  REQUIRE(es.counter() == 0);
  REQUIRE_FALSE(es.observe(1.0500001));
  REQUIRE(es.counter() == 1);
  REQUIRE_FALSE(es.observe(0.99)); // genuine improvement resets
  REQUIRE(es.counter() == 0);
  REQUIRE(es.best() == 0.99);
}

TEST_CASE("higher-is-better mirrors every comparison") {
  EarlyStopper es(2, 0.0, true);
  REQUIRE_FALSE(es.observe(0.5));
  REQUIRE_FALSE(es.observe(0.6));
  REQUIRE_FALSE(es.observe(0.55));
  REQUIRE(es.observe(0.54));
  REQUIRE(es.best() == 0.6);
}

TEST_CASE("stopper matches a straight-line reference on random traces") {
  Rng rng(321);
  for (int trial = 0; trial < 400; ++trial) {
    const int len = 3 + static_cast<int>(rng.uniform_int(30));
    std::vector<double> ms(static_cast<std::size_t>(len));
    // quantized values provoke exact ties and dead-zone boundaries
    for (double &m : ms)
      m = 0.05 * static_cast<double>(rng.uniform_int(20));
    const int patience = 1 + static_cast<int>(rng.uniform_int(4));
    const double min_delta = 0.05 * static_cast<double>(rng.uniform_int(3));
    const bool higher = rng.uniform() < 0.5;

    StopRef ref = reference_stop(ms, patience, min_delta, higher);
    EarlyStopper es(patience, min_delta, higher);
    int stop_epoch = -1;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (es.observe(ms[i])) {
        stop_epoch = static_cast<int>(i) + 1;
        break;
      }
    }
    REQUIRE(stop_epoch == ref.stop_epoch);
    REQUIRE(es.best() == ref.best);
  }
}

TEST_CASE("stopper rejects bad construction and reuse after stop") {
  REQUIRE_THROWS_AS(EarlyStopper(0, 0.0, false), InputError);
  REQUIRE_THROWS_AS(EarlyStopper(2, -0.1, false), InputError);

  EarlyStopper es(1, 0.0, false);
  REQUIRE_FALSE(es.observe(1.0));
  REQUIRE(es.observe(2.0));
  REQUIRE_THROWS_AS(es.observe(0.5), StateError);
}

// ============================================================================
// Budget meter
// ============================================================================

TEST_CASE("budget meter charges up to the cap and refuses beyond it") {
  BudgetMeter meter(3);
  REQUIRE(meter.try_charge());
  REQUIRE(meter.try_charge());
  REQUIRE(meter.remaining() == 1);
  REQUIRE_FALSE(meter.try_charge(2)); // refusal leaves the count untouched
  REQUIRE(meter.used() == 2);
  REQUIRE(meter.try_charge());
  REQUIRE_FALSE(meter.try_charge());
  REQUIRE(meter.used() == 3);
  REQUIRE(meter.remaining() == 0);
}

TEST_CASE("zero-cap and unlimited meters sit at the extremes") {
  BudgetMeter zero(0);
  REQUIRE_FALSE(zero.try_charge());
  REQUIRE(zero.used() == 0);

  BudgetMeter open = BudgetMeter::unlimited();
  REQUIRE(open.is_unlimited());
  for (int i = 0; i < 100; ++i)
    REQUIRE(open.try_charge());
  REQUIRE(open.used() == 100);
  REQUIRE(open.remaining() == std::numeric_limits<std::int64_t>::max());

  REQUIRE_THROWS_AS(BudgetMeter(-1), InputError);
}

TEST_CASE("retraining uses a tenth of the base learning rate") {
  REQUIRE(finetune_lr(0.1) == Catch::Approx(0.01));
  REQUIRE(finetune_lr(0.5) == Catch::Approx(0.05));
  REQUIRE_THROWS_AS(finetune_lr(0.0), InputError);
  REQUIRE_THROWS_AS(finetune_lr(-0.1), InputError);
}

// ============================================================================
// Evaluation
// ============================================================================

TEST_CASE("evaluation is independent of the batch partition") {
  Problem prob = make_problem();
  Network net = make_net(3);
  EvalResult whole = evaluate(net, prob.val, 1024);
  EvalResult pieces = evaluate(net, prob.val, 5);
  REQUIRE(whole.loss == Catch::Approx(pieces.loss).margin(1e-12));
  REQUIRE(whole.accuracy == Catch::Approx(pieces.accuracy).margin(1e-12));
}

TEST_CASE("evaluation rejects an empty dataset") {
  Problem prob = make_problem();
  Network net = make_net(3);
  Dataset empty = prob.val.select({});
  REQUIRE_THROWS_AS(evaluate(net, empty, 8), InputError);
}

// ============================================================================
// Fine-tuning phases
// ============================================================================

TEST_CASE("history starts at epoch one and fixed mode runs exactly n epochs") {
  Problem prob = make_problem();
  Network net = make_net(7);
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(3);
  cfg.seed = 42;

  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg);
  REQUIRE(res.epochs_used == 3);
  REQUIRE(res.history.size() == 3);
  REQUIRE(res.history[0].epoch == 1); // no epoch-zero record
  REQUIRE(res.history[2].epoch == 3);
  REQUIRE_FALSE(res.budget_truncated);
  REQUIRE(res.best_epoch >= 1);

  // max_epochs caps a longer fixed policy
  Network capped = make_net(7);
  cfg.stop = RetrainPolicy::fixed(10);
  cfg.max_epochs = 4;
  FinetuneResult res2 = finetune(capped, nullptr, prob.train, prob.val, cfg);
  REQUIRE(res2.epochs_used == 4);
}

TEST_CASE("plateau mode stops in agreement with the stopper over its history") {
  Problem prob = make_problem();
  Network net = make_net(19);
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.1;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::plateau(3);
  cfg.metric = Metric::val_loss;
  cfg.max_epochs = 500;
  cfg.seed = 9;

  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg);
  REQUIRE(res.epochs_used < cfg.max_epochs); // the loss does plateau

  std::vector<double> trace;
  for (const EpochRecord &r : res.history)
    trace.push_back(r.val_metric);
  StopRef ref = reference_stop(trace, 3, 0.0, false);
  REQUIRE(ref.stop_epoch == res.epochs_used);
  REQUIRE(ref.best == res.best_metric);

  // best_epoch is the first epoch achieving the best metric
  REQUIRE(res.history[static_cast<std::size_t>(res.best_epoch) - 1].val_metric ==
          res.best_metric);
  for (int e = 1; e < res.best_epoch; ++e)
    REQUIRE(res.history[static_cast<std::size_t>(e) - 1].val_metric >
            res.best_metric);
}

TEST_CASE("the best epoch weights are restored on exit") {
  Problem prob = make_problem();
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.1;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::plateau(3);
  cfg.metric = Metric::val_loss;
  cfg.max_epochs = 200;
  cfg.seed = 9;

  Network net = make_net(19);
  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg);
  EvalResult after = evaluate(net, prob.val, cfg.sgd.batch_size);
  REQUIRE(after.loss == Catch::Approx(res.best_metric).margin(1e-12));

  // without restoration the net keeps its last-epoch weights
  Network raw = make_net(19);
  cfg.restore_best = false;
  FinetuneResult res2 = finetune(raw, nullptr, prob.train, prob.val, cfg);
  EvalResult last = evaluate(raw, prob.val, cfg.sgd.batch_size);
  REQUIRE(last.loss ==
          Catch::Approx(res2.history.back().val_metric).margin(1e-12));
}

TEST_CASE("masked positions stay exactly zero through a training phase") {
  Problem prob = make_problem();
  Network net = make_net(23);

  ScoreMap scores =
      magnitude_scores(net, MagnitudeNorm::l1, Granularity::weight);
  const std::int64_t kill = net.prunable_count() * 3 / 10;
  MaskSet mask = select_unstructured(scores, kill, MaskSet::all_kept(net));
  apply_mask(net, mask);

  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.1;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(5);
  cfg.seed = 4;
  finetune(net, &mask, prob.train, prob.val, cfg);

  for (int li : net.prunable_layers()) {
    const Tensor &w = net.layers[static_cast<std::size_t>(li)].weight;
    for (std::size_t i = 0; i < w.values.size(); ++i)
      if (!mask.kept(li, static_cast<std::int64_t>(i)))
        REQUIRE(w.values[i] == 0.0);
  }
}

TEST_CASE("a spent budget truncates the phase and charges nothing further") {
  Problem prob = make_problem();
  Network net = make_net(31);
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(10);
  cfg.seed = 1;

  BudgetMeter meter(3);
  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg,
                                &meter);
  REQUIRE(res.epochs_used == 3);
  REQUIRE(res.budget_truncated);
  REQUIRE(meter.used() == 3);
  REQUIRE(meter.remaining() == 0);

  // a second phase on the same meter cannot run any epoch
  std::vector<double> before = net.snapshot();
  FinetuneResult res2 = finetune(net, nullptr, prob.train, prob.val, cfg,
                                 &meter);
  REQUIRE(res2.epochs_used == 0);
  REQUIRE(res2.budget_truncated);
  REQUIRE(res2.history.empty());
  REQUIRE(res2.best_epoch == 0);
  REQUIRE(std::isnan(res2.best_metric));
  REQUIRE(net.snapshot() == before); // weights untouched
  REQUIRE(meter.used() == 3);
}

TEST_CASE("phases are deterministic and carry no hidden optimizer state") {
  Problem prob = make_problem();
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(4);
  cfg.seed = 77;

  // same seed, same start: bitwise identical trajectories
  Network a = make_net(13);
  Network b = make_net(13);
  FinetuneResult ra = finetune(a, nullptr, prob.train, prob.val, cfg);
  FinetuneResult rb = finetune(b, nullptr, prob.train, prob.val, cfg);
  REQUIRE(a.snapshot() == b.snapshot());
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    REQUIRE(ra.history[i].train_loss == rb.history[i].train_loss);
    REQUIRE(ra.history[i].val_loss == rb.history[i].val_loss);
  }

  // a warm net and a fresh net restored to the same weights continue
  // identically, so no momentum leaks across phase boundaries
  Network fresh = make_net(99);
  fresh.restore(a.snapshot());
  FinetuneResult rc = finetune(a, nullptr, prob.train, prob.val, cfg);
  FinetuneResult rd = finetune(fresh, nullptr, prob.train, prob.val, cfg);
  REQUIRE(a.snapshot() == fresh.snapshot());
  REQUIRE(rc.history[0].train_loss == rd.history[0].train_loss);

  // a different shuffle seed gives a different trajectory
  Network c = make_net(13);
  cfg.seed = 78;
  FinetuneResult re = finetune(c, nullptr, prob.train, prob.val, cfg);
  REQUIRE(re.history[0].train_loss != ra.history[0].train_loss);
}

TEST_CASE("accuracy-driven phases track the running maximum") {
  Problem prob = make_problem();
  Network net = make_net(41);
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(6);
  cfg.metric = Metric::val_accuracy;
  cfg.seed = 3;

  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg);
  double best = -1.0;
  int best_epoch = 0;
  for (const EpochRecord &r : res.history) {
    REQUIRE(r.val_metric >= 0.0);
    REQUIRE(r.val_metric <= 1.0);
    if (r.val_metric > best) {
      best = r.val_metric;
      best_epoch = r.epoch;
    }
  }
  REQUIRE(res.best_metric == best);
  REQUIRE(res.best_epoch == best_epoch);

  REQUIRE(std::string(metric_name(Metric::val_accuracy)) == "val_accuracy");
  REQUIRE(metric_higher_is_better(Metric::val_accuracy));
  REQUIRE_FALSE(metric_higher_is_better(Metric::val_loss));
}

TEST_CASE("the history sink receives one json line per epoch") {
  Problem prob = make_problem();
  Network net = make_net(55);
  FinetuneConfig cfg;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.batch_size = 16;
  cfg.stop = RetrainPolicy::fixed(3);
  cfg.seed = 2;

  std::ostringstream sink;
  FinetuneResult res = finetune(net, nullptr, prob.train, prob.val, cfg,
                                nullptr, &sink);
  std::istringstream lines(sink.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    nlohmann::json js = nlohmann::json::parse(line);
    ++count;
    REQUIRE(js.at("epoch") == count);
    REQUIRE(js.contains("train_loss"));
    REQUIRE(js.contains("val_loss"));
    REQUIRE(js.contains("learning_rate"));
  }
  REQUIRE(count == res.epochs_used);
}

TEST_CASE("phases reject empty inputs") {
  Problem prob = make_problem();
  Network net = make_net(1);
  Dataset empty = prob.train.select({});
  FinetuneConfig cfg;
  REQUIRE_THROWS_AS(finetune(net, nullptr, empty, prob.val, cfg), InputError);
  REQUIRE_THROWS_AS(finetune(net, nullptr, prob.train, empty, cfg), InputError);
}
