// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/errors.hpp"
#include "prunelab/core/loss.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/core/sgd.hpp"
#include "prunelab/data/dataset.hpp"
#include "prunelab/prune/mask.hpp"
#include "prunelab/schedule/plan.hpp"
#include "prunelab/train/early_stop.hpp"

namespace prunelab {

/// Learning rate used by retraining phases, one tenth of the base rate.
inline double finetune_lr(double base_lr) {
  if (!(base_lr > 0.0))
    throw InputError("finetune_lr: base learning rate must be positive");
  return base_lr / 10.0;
}

/// Tracks a shared epoch allowance across phases.  A phase asks for one
/// epoch at a time before running it; refusal means the allowance is spent.
class BudgetMeter {
public:
  static BudgetMeter unlimited() { return BudgetMeter(); }

  explicit BudgetMeter(std::int64_t cap) : cap_(cap) {
    if (cap < 0)
      throw InputError("BudgetMeter: cap must be non-negative");
  }

  bool try_charge(std::int64_t epochs = 1) {
    if (cap_ >= 0 && used_ + epochs > cap_)
      return false;
    used_ += epochs;
    return true;
  }

  std::int64_t used() const { return used_; }
  std::int64_t cap() const { return cap_; }
  bool is_unlimited() const { return cap_ < 0; }
  std::int64_t remaining() const {
    return cap_ < 0 ? std::numeric_limits<std::int64_t>::max() : cap_ - used_;
  }

private:
  BudgetMeter() = default; // unlimited
  std::int64_t cap_ = -1;
  std::int64_t used_ = 0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean loss and accuracy over a dataset, batched to bound activation size.
inline EvalResult evaluate(Network &net, const Dataset &ds, int batch_size) {
  if (ds.size() == 0)
    throw InputError("evaluate: dataset is empty");
  auto batches = make_batches(ds, batch_size, 0, 0, /*shuffle=*/false);
  double loss_sum = 0.0;
  double correct = 0.0;
  for (const auto &b : batches) {
    const Tensor &logits = net.forward(b.inputs);
    LossResult lr = cross_entropy_loss(logits, b.labels);
    const double n = static_cast<double>(b.labels.size());
    loss_sum += lr.value * n;
    correct += accuracy(logits, b.labels) * n;
  }
  const double n = static_cast<double>(ds.size());
  return {loss_sum / n, correct / n};
}

/// Which validation quantity drives early stopping and best-epoch retention.
enum class Metric { val_loss, val_accuracy };

inline const char *metric_name(Metric m) {
  return m == Metric::val_loss ? "val_loss" : "val_accuracy";
}

inline bool metric_higher_is_better(Metric m) {
  return m == Metric::val_accuracy;
}

struct EpochRecord {
  int epoch = 0; // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  double learning_rate = 0.0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch},
            {"train_loss", train_loss},
            {"val_loss", val_loss},
            {"val_metric", val_metric},
            {"learning_rate", learning_rate}};
  }
};

struct FinetuneResult {
  int epochs_used = 0;
  std::vector<EpochRecord> history;
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;   // 0 when no epoch ran
  bool budget_truncated = false;
};

struct FinetuneConfig {
  SGDConfig sgd;
  RetrainPolicy stop = RetrainPolicy::plateau(5);
  int max_epochs = 10000;
  Metric metric = Metric::val_accuracy;
  std::uint64_t seed = 0;  // shuffle stream, mixed with the epoch index
  bool restore_best = true;
};

/// Runs one training phase: per-epoch SGD over shuffled batches, validation
/// after every epoch, plateau or fixed-length termination, and restoration
/// of the best-epoch weights on exit.  Validation happens only after epochs
/// that actually ran, so the history starts at epoch 1.  The optimizer is
/// created fresh here; momentum never leaks across phases.  When `budget`
/// refuses an epoch the phase ends with `budget_truncated` set and whatever
/// best weights it has seen so far.
inline FinetuneResult finetune(Network &net, const MaskSet *mask,
                               const Dataset &train, const Dataset &val,
                               const FinetuneConfig &cfg,
                               BudgetMeter *budget = nullptr,
                               std::ostream *history_sink = nullptr) {
  if (train.size() == 0 || val.size() == 0)
    throw InputError("finetune: train and validation sets must be non-empty");
  if (cfg.max_epochs < 0)
    throw InputError("finetune: max_epochs must be non-negative");
  if (cfg.stop.mode == RetrainPolicy::Mode::fixed && cfg.stop.epochs < 0)
    throw InputError("finetune: fixed epoch count must be non-negative");

  const bool higher_better = metric_higher_is_better(cfg.metric);
  Sgd opt(net);
  if (mask)
    apply_mask(net, *mask, opt);

  FinetuneResult result;
  EarlyStopper stopper(
      cfg.stop.mode == RetrainPolicy::Mode::patience ? cfg.stop.patience : 1,
      cfg.stop.min_delta, higher_better);
  std::vector<double> best_weights;
  double best = higher_better ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();

  int epoch_cap = cfg.max_epochs;
  if (cfg.stop.mode == RetrainPolicy::Mode::fixed)
    epoch_cap = std::min(epoch_cap, cfg.stop.epochs);

  for (int epoch = 1; epoch <= epoch_cap; ++epoch) {
    if (budget && !budget->try_charge(1)) {
      result.budget_truncated = true;
      break;
    }

    auto batches =
        make_batches(train, cfg.sgd.batch_size, cfg.seed, epoch, true);
    double loss_sum = 0.0;
    for (const auto &b : batches) {
      const Tensor &logits = net.forward(b.inputs);
      LossResult lr = cross_entropy_loss(logits, b.labels);
      loss_sum += lr.value * static_cast<double>(b.labels.size());
      net.backward(lr.dlogits);
      opt.step(net, cfg.sgd, mask);
    }

    EvalResult ev = evaluate(net, val, cfg.sgd.batch_size);
    const double metric =
        cfg.metric == Metric::val_loss ? ev.loss : ev.accuracy;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.val_loss = ev.loss;
    rec.val_metric = metric;
    rec.learning_rate = cfg.sgd.learning_rate;
    result.history.push_back(rec);
    result.epochs_used = epoch;
    if (history_sink)
      *history_sink << rec.to_json().dump() << "\n";

    const bool improved = higher_better ? metric > best : metric < best;
    if (improved) {
      best = metric;
      result.best_metric = metric;
      result.best_epoch = epoch;
      if (cfg.restore_best)
        best_weights = net.snapshot();
    }

    if (cfg.stop.mode == RetrainPolicy::Mode::patience &&
        stopper.observe(metric))
      break;
  }

  if (cfg.restore_best && !best_weights.empty()) {
    net.restore(best_weights);
    if (mask)
      apply_mask(net, *mask, opt);
  }
  return result;
}

} // namespace prunelab
