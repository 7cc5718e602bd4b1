// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <limits>

#include "prunelab/core/errors.hpp"

namespace prunelab {

/// Plateau detector over a stream of per-epoch metrics.
///
/// With higher_is_better == false (a loss):
///   m <  best              -> new best, counter resets
///   m >  best + min_delta  -> counter increments
///   otherwise              -> dead zone, nothing changes
/// Stops once counter reaches patience.  higher_is_better mirrors the
/// comparisons.  The dead zone is half-open: a metric exactly min_delta away
/// from best neither improves nor counts against patience.
class EarlyStopper {
public:
  EarlyStopper(int patience, double min_delta, bool higher_is_better)
      : patience_(patience), min_delta_(min_delta),
        higher_is_better_(higher_is_better) {
    if (patience < 1)
      throw InputError("EarlyStopper: patience must be at least 1");
    if (min_delta < 0.0)
      throw InputError("EarlyStopper: min_delta must be non-negative");
    best_ = higher_is_better ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
  }

  /// Feeds one metric; returns true when training should stop.
  bool observe(double m) {
    if (stopped_)
      throw StateError("EarlyStopper: observe called after stop");
    const bool improved = higher_is_better_ ? m > best_ : m < best_;
    if (improved) {
      best_ = m;
      counter_ = 0;
    } else {
      const bool worse = higher_is_better_ ? m < best_ - min_delta_
                                           : m > best_ + min_delta_;
      if (worse)
        ++counter_;
    }
    stopped_ = counter_ >= patience_;
    return stopped_;
  }

  double best() const { return best_; }
  int counter() const { return counter_; }
  bool stopped() const { return stopped_; }

private:
  int patience_;
  double min_delta_;
  bool higher_is_better_;
  double best_;
  int counter_ = 0;
  bool stopped_ = false;
};

} // namespace prunelab
