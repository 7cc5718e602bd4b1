// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/core/tensor.hpp"

namespace prunelab {

/// Supervised classification dataset.  Inputs are [N, F] or [N, C, H, W];
/// rows align with labels.
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  int classes = 0;

  std::int64_t size() const {
    return inputs.shape.empty() ? 0 : inputs.shape[0];
  }

  std::int64_t row_width() const {
    return size() == 0 ? 0 : inputs.numel() / size();
  }

  /// Gathers the given rows into a new dataset (order preserved).
  Dataset select(const std::vector<int> &rows) const {
    Dataset out;
    out.classes = classes;
    std::vector<int> shape = inputs.shape;
    shape[0] = static_cast<int>(rows.size());
    out.inputs = Tensor(shape);
    out.labels.resize(rows.size());
    const std::int64_t w = row_width();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int r = rows[i];
      std::copy(inputs.values.begin() + r * w,
                inputs.values.begin() + (r + 1) * w,
                out.inputs.values.begin() + static_cast<std::int64_t>(i) * w);
      out.labels[i] = labels[r];
    }
    return out;
  }
};

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train, val, test;
};

/// Deterministic shuffled partition.  Subset sizes are floor(fraction * N)
/// for val and test; train takes the remainder.  Requesting a positive
/// fraction that floors to an empty subset is an error, as is an empty train.
inline Splits split(const Dataset &ds, const SplitSpec &spec) {
  if (spec.train < 0 || spec.val < 0 || spec.test < 0 ||
      spec.train + spec.val + spec.test > 1.0 + 1e-12)
    throw InputError("split: fractions must be non-negative and sum to <= 1");
  const std::int64_t n = ds.size();
  const std::int64_t n_val = static_cast<std::int64_t>(spec.val * n);
  const std::int64_t n_test = static_cast<std::int64_t>(spec.test * n);
  const std::int64_t n_train = n - n_val - n_test;
  if (n_train <= 0 || (spec.val > 0 && n_val == 0) ||
      (spec.test > 0 && n_test == 0))
    throw InputError("split: requested fractions leave a subset empty (N=" +
                     std::to_string(n) + ")");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);
  Splits out;
  out.train = ds.select({order.begin(), order.begin() + n_train});
  out.val = ds.select({order.begin() + n_train, order.begin() + n_train + n_val});
  out.test = ds.select({order.begin() + n_train + n_val, order.end()});
  return out;
}

struct Batch {
  Tensor inputs;
  std::vector<int> labels;
};

/// Slices the dataset into consecutive batches; the final short batch is
/// kept.  When shuffling, the permutation is seeded with mix(seed, epoch) so
/// every epoch reshuffles yet any (seed, epoch) pair replays exactly.
inline std::vector<Batch> make_batches(const Dataset &ds, int batch_size,
                                       std::uint64_t seed, std::int64_t epoch,
                                       bool shuffle) {
  if (batch_size <= 0)
    throw InputError("make_batches: batch size must be positive");
  const std::int64_t n = ds.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
  }
  std::vector<Batch> out;
  out.reserve(static_cast<std::size_t>((n + batch_size - 1) / batch_size));
  for (std::int64_t at = 0; at < n; at += batch_size) {
    const std::int64_t hi = std::min<std::int64_t>(n, at + batch_size);
    const Dataset part =
        ds.select({order.begin() + at, order.begin() + hi});
    out.push_back(Batch{part.inputs, part.labels});
  }
  return out;
}

} // namespace prunelab
