// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/data/dataset.hpp"

namespace prunelab {

enum class SyntheticKind { spirals, gaussians };

/// 2-D synthetic classification data.
///
/// spirals:   interleaved arms, one per class; `noise` perturbs the angle.
/// gaussians: isotropic blobs with means on a radius-2 circle and standard
///            deviation `noise` (noise 0 collapses each class to a point,
///            which is linearly separable).
///
/// Classes are emitted round-robin, so any prefix is nearly balanced and
/// total class counts differ by at most one.
inline Dataset gen_synthetic(SyntheticKind kind, int n, int classes,
                             double noise, std::uint64_t seed) {
  if (n <= 0)
    throw InputError("gen_synthetic: n must be positive");
  if (classes < 2)
    throw InputError("gen_synthetic: need at least two classes");
  if (noise < 0.0)
    throw InputError("gen_synthetic: noise must be non-negative");
  Rng rng(seed);
  Dataset ds;
  ds.classes = classes;
  ds.inputs = Tensor({n, 2});
  ds.labels.resize(static_cast<std::size_t>(n));
  const double two_pi = 2.0 * 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    const int k = i % classes;
    double x = 0.0, y = 0.0;
    if (kind == SyntheticKind::spirals) {
      const double t = rng.uniform();
      const double r = 0.15 + 0.85 * t;
      const double theta =
          two_pi * k / classes + 4.0 * t + noise * rng.normal();
      x = r * std::cos(theta);
      y = r * std::sin(theta);
    } else {
      const double cx = 2.0 * std::cos(two_pi * k / classes);
      const double cy = 2.0 * std::sin(two_pi * k / classes);
      x = cx + noise * rng.normal();
      y = cy + noise * rng.normal();
    }
    ds.inputs.values[2 * static_cast<std::size_t>(i)] = x;
    ds.inputs.values[2 * static_cast<std::size_t>(i) + 1] = y;
    ds.labels[static_cast<std::size_t>(i)] = k;
  }
  return ds;
}

} // namespace prunelab
