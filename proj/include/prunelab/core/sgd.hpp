// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/prune/mask.hpp"

namespace prunelab {

struct SGDConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch_size = 512;
};

// ============================================================================
// Sgd
// ============================================================================

/// Momentum SGD with decoupled mask handling.  The update is
///
///   v <- momentum * v + grad + weight_decay * w
///   w <- w - learning_rate * v
///
/// Masked positions are clamped instead: weight and velocity are forced to
/// exactly zero every step, so a pruned weight can never drift and carries no
/// momentum into later steps.
class Sgd {
public:
  explicit Sgd(const Network &net) {
    vel_w_.resize(net.layers.size());
    vel_b_.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      vel_w_[i].assign(net.layers[i].weight.values.size(), 0.0);
      vel_b_[i].assign(net.layers[i].bias.values.size(), 0.0);
    }
  }

  /// One optimizer step from the currently accumulated gradients.  Pass the
  /// active mask (or nullptr for a dense update).  Gradients are consumed:
  /// they are zeroed after the step so the next batch starts clean.
  void step(Network &net, const SGDConfig &cfg, const MaskSet *mask) {
    if (vel_w_.size() != net.layers.size())
      throw StateError("Sgd::step: optimizer built for a different network");
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      Layer &l = net.layers[li];
      if (l.weight.numel() > 0) {
        if (!l.weight.has_grad())
          throw StateError("Sgd::step: no gradient on " + l.name +
                           " (run backward first)");
        const std::uint8_t *m =
            mask && !mask->layer(static_cast<int>(li)).empty()
                ? mask->layer(static_cast<int>(li)).data()
                : nullptr;
        update(l.weight.values, l.weight.grad, vel_w_[li], cfg, m);
      }
      if (l.bias.numel() > 0) {
        if (!l.bias.has_grad())
          throw StateError("Sgd::step: no gradient on " + l.name + " bias");
        update(l.bias.values, l.bias.grad, vel_b_[li], cfg, nullptr);
      }
    }
    net.zero_grad();
  }

  /// Zeroes velocity at masked positions.  Called when a new mask is applied
  /// so stale momentum cannot resurrect a pruned weight.
  void clamp_masked(const MaskSet &mask) {
    for (std::size_t li = 0; li < vel_w_.size(); ++li) {
      if (mask.layer(static_cast<int>(li)).empty())
        continue;
      const auto &m = mask.layer(static_cast<int>(li));
      if (m.size() != vel_w_[li].size())
        throw StateError("Sgd::clamp_masked: mask size mismatch");
      for (std::size_t i = 0; i < m.size(); ++i)
        if (!m[i])
          vel_w_[li][i] = 0.0;
    }
  }

  void reset() {
    for (auto &v : vel_w_)
      std::fill(v.begin(), v.end(), 0.0);
    for (auto &v : vel_b_)
      std::fill(v.begin(), v.end(), 0.0);
  }

private:
  std::vector<std::vector<double>> vel_w_, vel_b_;

  static void update(std::vector<double> &w, const std::vector<double> &g,
                     std::vector<double> &v, const SGDConfig &cfg,
                     const std::uint8_t *mask) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (mask && !mask[i]) {
        v[i] = 0.0;
        w[i] = 0.0;
        continue;
      }
      v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * w[i];
      w[i] -= cfg.learning_rate * v[i];
    }
  }
};

/// Applies a mask to weights and optimizer state together.
inline void apply_mask(Network &net, const MaskSet &mask, Sgd &opt) {
  apply_mask(net, mask);
  opt.clamp_masked(mask);
}

} // namespace prunelab
