// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prunelab/core/network.hpp"
#include "prunelab/prune/criteria.hpp"
#include "prunelab/prune/mask.hpp"

namespace prunelab {

// ============================================================================
// Unstructured selection
// ============================================================================

/// Prunes exactly `count` additional weights: the lowest-scoring positions
/// still kept by `existing`, chosen globally across all layers.  Score ties
/// break by (layer index, flat index) ascending, so selection is a total
/// order and bit-reproducible.
inline MaskSet select_unstructured(const ScoreMap &scores, std::int64_t count,
                                   const MaskSet &existing) {
  if (scores.granularity != Granularity::weight)
    throw ConfigError("select_unstructured: needs weight-granularity scores");
  if (count < 0)
    throw InputError("select_unstructured: count must be non-negative");

  struct Cand {
    double score;
    int layer;
    std::int64_t idx;
  };
  std::vector<Cand> cands;
  for (const auto &[li, s] : scores.scores) {
    if (li < 0 || static_cast<std::size_t>(li) >= existing.layer_slots() ||
        existing.layer(li).size() != s.size())
      throw StateError("select_unstructured: scores do not align with mask");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (existing.kept(li, static_cast<std::int64_t>(i)))
        cands.push_back({s[i], li, static_cast<std::int64_t>(i)});
  }
  if (count > static_cast<std::int64_t>(cands.size()))
    throw InputError("select_unstructured: count " + std::to_string(count) +
                     " exceeds kept weights " + std::to_string(cands.size()));

  const auto lower = [](const Cand &a, const Cand &b) {
    if (a.score != b.score)
      return a.score < b.score;
    if (a.layer != b.layer)
      return a.layer < b.layer;
    return a.idx < b.idx;
  };
  // Partition around the cut, then order the prefix exactly so ties at the
  // boundary resolve deterministically.
  if (count < static_cast<std::int64_t>(cands.size()))
    std::nth_element(cands.begin(), cands.begin() + count, cands.end(), lower);
  std::sort(cands.begin(),
            cands.begin() + std::min<std::int64_t>(
                                count, static_cast<std::int64_t>(cands.size())),
            lower);

  MaskSet out = existing;
  for (std::int64_t i = 0; i < count; ++i)
    out.prune(cands[static_cast<std::size_t>(i)].layer,
              cands[static_cast<std::size_t>(i)].idx);
  return out;
}

// ============================================================================
// Structured selection
// ============================================================================

/// Per-layer channel pruning fractions, keyed by inventory entry name.
/// Entries absent from the map keep all channels.
struct StructuredRatioSpec {
  std::map<std::string, double> ratios;
};

namespace detail {

/// Weights per output channel for a prunable layer.
inline std::size_t row_width(const Layer &l) {
  return l.weight.values.size() / static_cast<std::size_t>(l.channels());
}

/// True if every weight of output channel `c` is pruned.
inline bool channel_pruned(const MaskSet &m, int layer, const Layer &l, int c) {
  const std::size_t row = row_width(l);
  for (std::size_t i = 0; i < row; ++i)
    if (m.kept(layer, static_cast<std::int64_t>(c * row + i)))
      return false;
  return true;
}

} // namespace detail

/// Structured pruning over output channels.  For each named layer the target
/// is floor(ratio * original_channels) pruned channels; the lowest-scoring
/// surviving channels fill the gap (ties by channel index).  Pruning channel
/// c of a layer also zeroes input slice c of its successor in the chain, so
/// the masked network computes exactly what a physically rebuilt one would.
/// A ratio that would leave a layer without output channels is a collapse
/// and rejected.
inline MaskSet select_structured(const ScoreMap &scores, const Inventory &inv,
                                 const StructuredRatioSpec &spec,
                                 const MaskSet &existing, const Network &net) {
  if (scores.granularity != Granularity::channel)
    throw ConfigError("select_structured: needs channel-granularity scores");
  for (const auto &[name, r] : spec.ratios) {
    if (!(r >= 0.0 && r < 1.0))
      throw ConfigError("select_structured: ratio for '" + name +
                        "' must lie in [0,1)");
    bool found = false;
    for (const auto &e : inv.entries)
      found = found || e.name == name;
    if (!found)
      throw ConfigError("select_structured: no inventory entry named '" +
                        name + "'");
  }

  MaskSet out = existing;
  for (std::size_t ei = 0; ei < inv.entries.size(); ++ei) {
    const InventoryEntry &e = inv.entries[ei];
    const auto it = spec.ratios.find(e.name);
    if (it == spec.ratios.end())
      continue;
    const int li = e.layer_index;
    const Layer &l = net.layers[li];
    const int ch = l.channels();
    const int target =
        static_cast<int>(it->second * ch); // floor for 0 <= ratio < 1
    if (target >= ch)
      throw ConfigError("select_structured: pruning collapse at " + e.name);

    const auto &s = scores.scores.at(li);
    if (s.size() != static_cast<std::size_t>(ch))
      throw StateError("select_structured: channel scores do not align at " +
                       e.name);
    std::vector<int> alive;
    for (int c = 0; c < ch; ++c)
      if (!detail::channel_pruned(out, li, l, c))
        alive.push_back(c);
    const int already = ch - static_cast<int>(alive.size());
    const int need = target - already;
    if (need <= 0)
      continue;
    std::sort(alive.begin(), alive.end(), [&](int a, int b) {
      if (s[a] != s[b])
        return s[a] < s[b];
      return a < b;
    });

    // Locate the chain successor so coupled input slices fall with us.
    int succ = -1;
    for (std::size_t j = 0; j < inv.entries.size(); ++j)
      if (inv.entries[j].predecessor == static_cast<int>(ei))
        succ = static_cast<int>(j);

    const std::size_t row = detail::row_width(l);
    for (int k = 0; k < need; ++k) {
      const int c = alive[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < row; ++i)
        out.prune(li, static_cast<std::int64_t>(c) * row + i);
      if (succ >= 0) {
        const InventoryEntry &se = inv.entries[static_cast<std::size_t>(succ)];
        const Layer &sl = net.layers[se.layer_index];
        const std::size_t srow = detail::row_width(sl);
        const std::size_t unit = static_cast<std::size_t>(se.unit);
        for (int o = 0; o < se.out_channels; ++o) {
          const std::size_t base =
              static_cast<std::size_t>(o) * srow + c * unit;
          for (std::size_t u = 0; u < unit; ++u)
            out.prune(se.layer_index, static_cast<std::int64_t>(base + u));
        }
      }
    }
  }
  return out;
}

// ============================================================================
// Overall-ratio prediction
// ============================================================================

/// Predicted fraction of prunable weights removed by a structured spec,
/// including coupled input-slice removals, without touching any mask.
/// Channel counts use the same floor arithmetic as select_structured, so on a
/// freshly built network the prediction matches measured sparsity exactly.
inline double overall_ratio(const Inventory &inv,
                            const StructuredRatioSpec &spec) {
  if (inv.entries.empty())
    throw InputError("overall_ratio: empty inventory");
  std::vector<std::int64_t> kept_out(inv.entries.size());
  std::int64_t total = 0, kept = 0;
  for (std::size_t i = 0; i < inv.entries.size(); ++i) {
    const InventoryEntry &e = inv.entries[i];
    double ratio = 0.0;
    if (const auto it = spec.ratios.find(e.name); it != spec.ratios.end())
      ratio = it->second;
    if (!(ratio >= 0.0 && ratio < 1.0))
      throw ConfigError("overall_ratio: ratio for '" + e.name +
                        "' must lie in [0,1)");
    const std::int64_t pruned =
        static_cast<std::int64_t>(ratio * e.out_channels);
    kept_out[i] = e.out_channels - pruned;
    if (kept_out[i] <= 0)
      throw ConfigError("overall_ratio: pruning collapse at " + e.name);
    const std::int64_t kept_in =
        e.predecessor < 0 ? e.in_channels : kept_out[e.predecessor];
    total += e.weight_count;
    kept += kept_out[i] * kept_in * e.unit;
  }
  return 1.0 - static_cast<double>(kept) / static_cast<double>(total);
}

} // namespace prunelab
