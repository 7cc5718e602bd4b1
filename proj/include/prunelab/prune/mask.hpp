// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/errors.hpp"
#include "prunelab/core/network.hpp"

namespace prunelab {

// ============================================================================
// MaskSet
// ============================================================================

/// Keep/prune flags for every prunable weight, aligned with a Network's layer
/// list.  A position can only move from kept to pruned; there is no unprune
/// operation, which makes monotonicity a structural guarantee.
class MaskSet {
public:
  MaskSet() = default;

  /// All-kept mask sized to the network's prunable layers.
  static MaskSet all_kept(const Network &net) {
    MaskSet m;
    m.masks_.resize(net.layers.size());
    for (int i : net.prunable_layers())
      m.masks_[i].assign(
          static_cast<std::size_t>(net.layers[i].weight.numel()), 1);
    return m;
  }

  bool empty() const { return masks_.empty(); }
  std::size_t layer_slots() const { return masks_.size(); }

  const std::vector<std::uint8_t> &layer(int i) const { return masks_[i]; }

  bool kept(int layer, std::int64_t idx) const {
    return masks_[layer][static_cast<std::size_t>(idx)] != 0;
  }

  void prune(int layer, std::int64_t idx) {
    masks_[layer][static_cast<std::size_t>(idx)] = 0;
  }

  std::int64_t total_count() const {
    std::int64_t n = 0;
    for (const auto &m : masks_)
      n += static_cast<std::int64_t>(m.size());
    return n;
  }

  std::int64_t pruned_count() const {
    std::int64_t n = 0;
    for (const auto &m : masks_)
      for (std::uint8_t b : m)
        n += b == 0 ? 1 : 0;
    return n;
  }

  std::int64_t kept_count() const { return total_count() - pruned_count(); }

  /// Pruned / total over the prunable pool.
  double sparsity() const {
    const std::int64_t t = total_count();
    return t == 0 ? 0.0 : static_cast<double>(pruned_count()) / t;
  }

  /// True if every position pruned in `earlier` is still pruned here.
  bool covers(const MaskSet &earlier) const {
    if (earlier.masks_.size() != masks_.size())
      return false;
    for (std::size_t l = 0; l < masks_.size(); ++l) {
      if (earlier.masks_[l].size() != masks_[l].size())
        return false;
      for (std::size_t i = 0; i < masks_[l].size(); ++i)
        if (earlier.masks_[l][i] == 0 && masks_[l][i] != 0)
          return false;
    }
    return true;
  }

  /// JSON export: per layer a packed little-endian bitset (bit = kept),
  /// base64-encoded, plus counts for quick inspection.
  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::object();
    for (std::size_t l = 0; l < masks_.size(); ++l) {
      if (masks_[l].empty())
        continue;
      std::vector<std::uint8_t> bits((masks_[l].size() + 7) / 8, 0);
      std::int64_t pruned = 0;
      for (std::size_t i = 0; i < masks_[l].size(); ++i) {
        if (masks_[l][i])
          bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        else
          ++pruned;
      }
      layers[std::to_string(l)] = {{"size", masks_[l].size()},
                                   {"pruned", pruned},
                                   {"kept_bits_b64", base64(bits)}};
    }
    return {{"layers", layers},
            {"total", total_count()},
            {"pruned", pruned_count()}};
  }

private:
  std::vector<std::vector<std::uint8_t>> masks_;

  static std::string base64(const std::vector<std::uint8_t> &in) {
    static const char *tab =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < in.size(); i += 3) {
      std::uint32_t v = static_cast<std::uint32_t>(in[i]) << 16;
      if (i + 1 < in.size())
        v |= static_cast<std::uint32_t>(in[i + 1]) << 8;
      if (i + 2 < in.size())
        v |= in[i + 2];
      out += tab[(v >> 18) & 63];
      out += tab[(v >> 12) & 63];
      out += i + 1 < in.size() ? tab[(v >> 6) & 63] : '=';
      out += i + 2 < in.size() ? tab[v & 63] : '=';
    }
    return out;
  }

  friend class CheckpointCodec;
};

/// Zeroes masked weights in place.  Idempotent; optimizer state is handled by
/// Sgd::clamp_masked so both always move together (see apply_mask overload in
/// sgd.hpp).
inline void apply_mask(Network &net, const MaskSet &mask) {
  if (mask.layer_slots() != net.layers.size())
    throw StateError("apply_mask: mask does not align with network layers");
  for (int li : net.prunable_layers()) {
    auto &w = net.layers[li].weight.values;
    const auto &m = mask.layer(li);
    if (m.size() != w.size())
      throw StateError("apply_mask: mask size mismatch at " +
                       net.layers[li].name);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!m[i])
        w[i] = 0.0;
  }
}

/// Sparsity of the mask (alias kept for call-site readability).
inline double sparsity(const MaskSet &mask) { return mask.sparsity(); }

/// Sparsity measured directly from a network's prunable weights: the fraction
/// that is exactly zero.  Equals sparsity(mask) right after apply_mask.
inline double sparsity(const Network &net) {
  std::int64_t zeros = 0, total = 0;
  for (int li : net.prunable_layers()) {
    for (double v : net.layers[li].weight.values)
      zeros += v == 0.0 ? 1 : 0;
    total += net.layers[li].weight.numel();
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / total;
}

} // namespace prunelab
