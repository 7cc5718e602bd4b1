// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/loss.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/data/dataset.hpp"

namespace prunelab {

enum class MagnitudeNorm { l1, l2 };
enum class Granularity { weight, channel };

/// Importance scores for every prunable layer, keyed by layer index.  Weight
/// granularity yields one score per weight (flat order); channel granularity
/// one score per output channel.  Scores are non-negative by construction;
/// lower means "prune first".
struct ScoreMap {
  Granularity granularity = Granularity::weight;
  std::string criterion;
  int batches_used = 0;
  std::map<int, std::vector<double>> scores;

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::object();
    for (const auto &[li, vec] : scores)
      layers[std::to_string(li)] = vec;
    return {{"criterion", criterion},
            {"granularity",
             granularity == Granularity::weight ? "weight" : "channel"},
            {"batches_used", batches_used},
            {"scores", layers}};
  }
};

namespace detail {

/// Reduces a per-weight score vector to per-channel sums for one layer.
inline std::vector<double> channel_sums(const Layer &l,
                                        const std::vector<double> &per_weight) {
  const int ch = l.channels();
  const std::size_t row =
      per_weight.size() / static_cast<std::size_t>(ch); // weights per channel
  std::vector<double> out(static_cast<std::size_t>(ch), 0.0);
  for (int c = 0; c < ch; ++c)
    for (std::size_t i = 0; i < row; ++i)
      out[static_cast<std::size_t>(c)] += per_weight[c * row + i];
  return out;
}

} // namespace detail

// ============================================================================
// Magnitude
// ============================================================================

/// Data-free scores: |w| under L1, w^2 under L2.  Channel scores are the
/// slice norm (sum of |w|, or sqrt of sum of squares), so a channel holding
/// weights [3, 4] scores 5 under L2.
inline ScoreMap magnitude_scores(const Network &net, MagnitudeNorm norm,
                                 Granularity gran) {
  ScoreMap sm;
  sm.granularity = gran;
  sm.criterion = norm == MagnitudeNorm::l1 ? "magnitude_l1" : "magnitude_l2";
  for (int li : net.prunable_layers()) {
    const Layer &l = net.layers[li];
    if (gran == Granularity::weight) {
      std::vector<double> s(l.weight.values.size());
      for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = norm == MagnitudeNorm::l1
                   ? std::abs(l.weight.values[i])
                   : l.weight.values[i] * l.weight.values[i];
      sm.scores[li] = std::move(s);
    } else {
      const int ch = l.channels();
      const std::size_t row = l.weight.values.size() / ch;
      std::vector<double> s(static_cast<std::size_t>(ch), 0.0);
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < row; ++i) {
          const double w = l.weight.values[c * row + i];
          acc += norm == MagnitudeNorm::l1 ? std::abs(w) : w * w;
        }
        s[static_cast<std::size_t>(c)] =
            norm == MagnitudeNorm::l1 ? acc : std::sqrt(acc);
      }
      sm.scores[li] = std::move(s);
    }
  }
  return sm;
}

// ============================================================================
// First-order Taylor
// ============================================================================

namespace detail {

/// Per-weight (grad * weight)^2 from the gradients currently held by the
/// network.  Factored out so the formula is testable with hand-set gradients.
inline std::map<int, std::vector<double>> taylor_from_grads(const Network &net) {
  std::map<int, std::vector<double>> out;
  for (int li : net.prunable_layers()) {
    const Layer &l = net.layers[li];
    std::vector<double> s(l.weight.values.size(), 0.0);
    if (l.weight.has_grad())
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double gw = l.weight.grad[i] * l.weight.values[i];
        s[i] = gw * gw;
      }
    out[li] = std::move(s);
  }
  return out;
}

} // namespace detail

/// First-order saliency: (g * w)^2 per weight, averaged over the evaluation
/// batches.  Needs exclusive access to the network: it runs forward/backward
/// passes and leaves all gradients zeroed.
inline ScoreMap taylor_scores(Network &net, const std::vector<Batch> &batches,
                              Granularity gran) {
  if (batches.empty())
    throw InputError("taylor_scores: at least one evaluation batch required");
  ScoreMap sm;
  sm.granularity = gran;
  sm.criterion = "taylor";
  sm.batches_used = static_cast<int>(batches.size());
  std::map<int, std::vector<double>> acc;
  for (const Batch &b : batches) {
    net.zero_grad();
    const Tensor logits = net.forward(b.inputs);
    const LossResult loss = cross_entropy_loss(logits, b.labels);
    net.backward(loss.dlogits);
    auto per_batch = detail::taylor_from_grads(net);
    for (auto &[li, vec] : per_batch) {
      auto &dst = acc[li];
      if (dst.empty())
        dst.assign(vec.size(), 0.0);
      for (std::size_t i = 0; i < vec.size(); ++i)
        dst[i] += vec[i];
    }
  }
  net.zero_grad();
  for (auto &[li, vec] : acc) {
    for (double &v : vec)
      v /= static_cast<double>(batches.size());
    sm.scores[li] = gran == Granularity::weight
                        ? std::move(vec)
                        : detail::channel_sums(net.layers[li], vec);
  }
  return sm;
}

// ============================================================================
// Diagonal-Hessian (OBD-style)
// ============================================================================

enum class HessianMode {
  fisher,     // empirical Fisher: mean per-sample squared gradient
  finite_diff // exact central second difference; verification oracle
};

namespace detail {

/// Diagonal curvature estimate per prunable weight.  Exposed separately so
/// the estimate itself can be checked against analytic second derivatives.
inline std::map<int, std::vector<double>>
hessian_diag(Network &net, const std::vector<Batch> &batches,
             HessianMode mode) {
  std::map<int, std::vector<double>> hdiag;
  for (int li : net.prunable_layers())
    hdiag[li].assign(net.layers[li].weight.values.size(), 0.0);

  if (mode == HessianMode::fisher) {
    std::int64_t samples = 0;
    for (const Batch &b : batches) {
      const int B = b.inputs.shape[0];
      std::vector<int> row_shape = b.inputs.shape;
      row_shape[0] = 1;
      const std::int64_t w = b.inputs.numel() / B;
      for (int s = 0; s < B; ++s) {
        Tensor row(row_shape);
        std::copy(b.inputs.values.begin() + s * w,
                  b.inputs.values.begin() + (s + 1) * w, row.values.begin());
        net.zero_grad();
        const Tensor logits = net.forward(row);
        const LossResult loss = cross_entropy_loss(logits, {b.labels[s]});
        net.backward(loss.dlogits);
        for (int li : net.prunable_layers()) {
          const Layer &l = net.layers[li];
          if (!l.weight.has_grad())
            continue;
          auto &h = hdiag[li];
          for (std::size_t i = 0; i < h.size(); ++i)
            h[i] += l.weight.grad[i] * l.weight.grad[i];
        }
        ++samples;
      }
    }
    net.zero_grad();
    for (auto &[li, h] : hdiag)
      for (double &v : h)
        v /= static_cast<double>(samples);
  } else {
    if (net.prunable_count() > 1000)
      throw InputError("obd_scores: finite_diff mode is limited to networks "
                       "of at most 1000 prunable weights");
    const double h = 1e-3;
    auto eval = [&]() {
      double total = 0.0;
      std::int64_t n = 0;
      for (const Batch &b : batches) {
        const Tensor logits = net.forward(b.inputs);
        total += cross_entropy_loss(logits, b.labels).value *
                 b.inputs.shape[0];
        n += b.inputs.shape[0];
      }
      return total / static_cast<double>(n);
    };
    const double base = eval();
    for (int li : net.prunable_layers()) {
      Layer &l = net.layers[li];
      for (std::size_t i = 0; i < l.weight.values.size(); ++i) {
        const double orig = l.weight.values[i];
        l.weight.values[i] = orig + h;
        const double up = eval();
        l.weight.values[i] = orig - h;
        const double down = eval();
        l.weight.values[i] = orig;
        hdiag[li][i] = (up - 2.0 * base + down) / (h * h);
      }
    }
  }
  return hdiag;
}

} // namespace detail

/// Second-order saliency 0.5 * h_kk * w_k^2 with a diagonal curvature
/// estimate.  The default estimate is the empirical Fisher diagonal (mean of
/// per-sample squared gradients over the evaluation batches).  finite_diff
/// computes the true diagonal by central differences and is limited to
/// networks of at most 1e3 prunable weights.  Negative true curvature (only
/// possible under finite_diff) clamps to zero saliency: removing such a
/// weight does not increase the loss, so it is maximally prunable.
inline ScoreMap obd_scores(Network &net, const std::vector<Batch> &batches,
                           Granularity gran,
                           HessianMode mode = HessianMode::fisher) {
  if (batches.empty())
    throw InputError("obd_scores: at least one evaluation batch required");
  ScoreMap sm;
  sm.granularity = gran;
  sm.criterion = "obd";
  sm.batches_used = static_cast<int>(batches.size());
  auto hdiag = detail::hessian_diag(net, batches, mode);
  for (auto &[li, h] : hdiag) {
    const Layer &l = net.layers[li];
    std::vector<double> s(h.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double hk = h[i] > 0.0 ? h[i] : 0.0;
      s[i] = 0.5 * hk * l.weight.values[i] * l.weight.values[i];
    }
    sm.scores[li] = gran == Granularity::weight
                        ? std::move(s)
                        : detail::channel_sums(l, s);
  }
  return sm;
}

} // namespace prunelab
