// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/layers.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/core/tensor.hpp"

namespace prunelab {

// ============================================================================
// Inventory
// ============================================================================

/// Channel-level description of one prunable layer, used by structured
/// selection and by overall-ratio prediction.  `unit` is the number of weights
/// tied to one (out_channel, in_channel) pair: k*k for conv2d, and for dense
/// layers the number of input features each upstream channel expands to
/// (1 after a dense predecessor, H*W after a flattened conv map).
struct InventoryEntry {
  std::string name;
  int layer_index = -1; // index into Network::layers; -1 for synthetic entries
  int out_channels = 0;
  int in_channels = 0;
  int unit = 1;
  std::int64_t weight_count = 0; // out_channels * in_channels * unit
  int predecessor = -1;          // entry index feeding this layer; -1 = input
};

struct Inventory {
  std::vector<InventoryEntry> entries;

  std::int64_t total_weights() const {
    std::int64_t n = 0;
    for (const auto &e : entries)
      n += e.weight_count;
    return n;
  }
};

// ============================================================================
// Network
// ============================================================================

/// An ordered stack of layers.  The container is a value type: copying it
/// snapshots parameters, which is how best-checkpoint retention works.
class Network {
public:
  std::vector<Layer> layers;

  Network() = default;

  /// input_shape excludes the batch dimension: {features} or {C, H, W}.
  explicit Network(std::vector<int> input_shape)
      : input_shape_(std::move(input_shape)) {}

  const std::vector<int> &input_shape() const { return input_shape_; }

  /// Seeded Kaiming-uniform init of every parameterized layer, in layer order.
  void init(std::uint64_t seed) {
    Rng rng(seed);
    for (auto &l : layers)
      l.init(rng);
  }

  Tensor forward(const Tensor &batch) {
    check_batch(batch);
    Tensor x = batch;
    for (auto &l : layers)
      x = l.forward(x);
    has_forward_ = true;
    return x;
  }

  /// Propagates d(loss)/d(logits) back through the stack, accumulating into
  /// each parameter's grad buffer.  Gradients add up across calls until
  /// zero_grad().
  void backward(const Tensor &dlogits) {
    if (!has_forward_)
      throw StateError("Network::backward called before forward");
    Tensor g = dlogits;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
      g = it->backward(g);
  }

  void zero_grad() {
    for (auto &l : layers)
      l.zero_grad();
  }

  /// Indices of layers that own prunable weights (dense, conv2d).
  std::vector<int> prunable_layers() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(layers.size()); ++i)
      if (layers[i].spec.prunable())
        out.push_back(i);
    return out;
  }

  /// Count of prunable weights.  Biases are never part of the pruning pool.
  std::int64_t prunable_count() const {
    std::int64_t n = 0;
    for (const auto &l : layers)
      if (l.spec.prunable())
        n += l.weight.numel();
    return n;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto &l : layers)
      n += l.weight.numel() + l.bias.numel();
    return n;
  }

  /// Flat copy of every parameter (weights then bias, in layer order).
  std::vector<double> snapshot() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(parameter_count()));
    for (const auto &l : layers) {
      flat.insert(flat.end(), l.weight.values.begin(), l.weight.values.end());
      flat.insert(flat.end(), l.bias.values.begin(), l.bias.values.end());
    }
    return flat;
  }

  void restore(const std::vector<double> &flat) {
    if (static_cast<std::int64_t>(flat.size()) != parameter_count())
      throw StateError("Network::restore: snapshot size mismatch");
    std::size_t off = 0;
    for (auto &l : layers) {
      std::copy(flat.begin() + off, flat.begin() + off + l.weight.values.size(),
                l.weight.values.begin());
      off += l.weight.values.size();
      std::copy(flat.begin() + off, flat.begin() + off + l.bias.values.size(),
                l.bias.values.begin());
      off += l.bias.values.size();
    }
  }

  /// Channel inventory of the prunable chain, derived from layer specs and
  /// the input shape.  Throws ConfigError if the stack is not a valid chain.
  Inventory inventory() const {
    Inventory inv;
    // Walk the stack tracking the activation shape to learn flatten widths.
    std::vector<int> shape = input_shape_;
    int prev_entry = -1;
    int prev_channels = shape.size() == 3 ? shape[0] : shape[0];
    int spatial = shape.size() == 3 ? shape[1] * shape[2] : 1;
    int h = shape.size() == 3 ? shape[1] : 0;
    int w = shape.size() == 3 ? shape[2] : 0;
    for (int i = 0; i < static_cast<int>(layers.size()); ++i) {
      const LayerSpec &s = layers[i].spec;
      switch (s.kind) {
      case LayerKind::conv2d: {
        InventoryEntry e;
        e.name = layers[i].name;
        e.layer_index = i;
        e.out_channels = s.out;
        e.in_channels = s.in;
        e.unit = s.kernel * s.kernel;
        e.weight_count = layers[i].weight.numel();
        e.predecessor = prev_entry;
        prev_entry = static_cast<int>(inv.entries.size());
        inv.entries.push_back(e);
        h = h - s.kernel + 1;
        w = w - s.kernel + 1;
        spatial = h * w;
        prev_channels = s.out;
        break;
      }
      case LayerKind::dense: {
        InventoryEntry e;
        e.name = layers[i].name;
        e.layer_index = i;
        e.out_channels = s.out;
        e.in_channels = prev_entry < 0 ? s.in : prev_channels;
        e.unit = s.in / e.in_channels;
        if (e.unit * e.in_channels != s.in)
          throw ConfigError(layers[i].name +
                            ": input features not divisible by channel count");
        e.weight_count = layers[i].weight.numel();
        e.predecessor = prev_entry;
        prev_entry = static_cast<int>(inv.entries.size());
        inv.entries.push_back(e);
        prev_channels = s.out;
        spatial = 1;
        h = w = 0;
        break;
      }
      case LayerKind::maxpool2x2:
        h /= 2;
        w /= 2;
        spatial = h * w;
        break;
      case LayerKind::flatten:
        // Channel identity is preserved; each channel now spans `spatial`
        // consecutive features, which becomes the next dense layer's unit.
        break;
      case LayerKind::relu:
        break;
      }
    }
    (void)spatial;
    return inv;
  }

private:
  std::vector<int> input_shape_;
  bool has_forward_ = false;

  void check_batch(const Tensor &batch) const {
    bool ok = batch.shape.size() == input_shape_.size() + 1;
    if (ok)
      for (std::size_t i = 0; i < input_shape_.size(); ++i)
        ok = ok && batch.shape[i + 1] == input_shape_[i];
    if (!ok) {
      std::string s = "Network::forward: batch shape mismatch, expected [B";
      for (int d : input_shape_)
        s += "," + std::to_string(d);
      throw ConfigError(s + "]");
    }
  }
};

// ============================================================================
// Builder
// ============================================================================

/// Validating builder.  Tracks the activation shape so misordered stacks
/// (dense before flatten, pooling a vector) fail at construction, not at the
/// first forward pass.
class NetworkBuilder {
public:
  explicit NetworkBuilder(std::vector<int> input_shape)
      : net_(input_shape), shape_(std::move(input_shape)) {
    if (shape_.size() != 1 && shape_.size() != 3)
      throw ConfigError("NetworkBuilder: input shape must be {F} or {C,H,W}");
  }

  NetworkBuilder &conv2d(int out_channels, int kernel) {
    require(shape_.size() == 3, "conv2d needs a {C,H,W} activation");
    const int oh = shape_[1] - kernel + 1, ow = shape_[2] - kernel + 1;
    require(oh > 0 && ow > 0, "conv2d kernel larger than activation");
    add(LayerSpec::conv2d(shape_[0], out_channels, kernel));
    shape_ = {out_channels, oh, ow};
    return *this;
  }

  NetworkBuilder &dense(int out_features, bool bias = true) {
    require(shape_.size() == 1, "dense needs a flat activation");
    add(LayerSpec::dense(shape_[0], out_features, bias));
    shape_ = {out_features};
    return *this;
  }

  NetworkBuilder &relu() {
    add(LayerSpec::relu());
    return *this;
  }

  NetworkBuilder &maxpool2x2() {
    require(shape_.size() == 3, "maxpool2x2 needs a {C,H,W} activation");
    require(shape_[1] >= 2 && shape_[2] >= 2, "activation too small to pool");
    add(LayerSpec::maxpool2x2());
    shape_ = {shape_[0], shape_[1] / 2, shape_[2] / 2};
    return *this;
  }

  NetworkBuilder &flatten() {
    require(shape_.size() == 3, "flatten needs a {C,H,W} activation");
    add(LayerSpec::flatten());
    shape_ = {shape_[0] * shape_[1] * shape_[2]};
    return *this;
  }

  /// Finalizes the stack; `seed` initializes parameters.
  Network build(std::uint64_t seed) {
    net_.init(seed);
    return std::move(net_);
  }

  /// Finalizes the stack with zeroed parameters; call init() before use.
  Network build() { return std::move(net_); }

private:
  Network net_;
  std::vector<int> shape_;

  void add(LayerSpec s) {
    const int idx = static_cast<int>(net_.layers.size());
    net_.layers.emplace_back(
        s, "layer" + std::to_string(idx) + ":" + kind_name(s.kind));
  }

  void require(bool ok, const char *msg) {
    if (!ok)
      throw ConfigError(std::string("NetworkBuilder: ") + msg);
  }
};

} // namespace prunelab
