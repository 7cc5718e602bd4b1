// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/tensor.hpp"

namespace prunelab {

struct LossResult {
  double value = 0.0; // mean cross-entropy over the batch
  Tensor dlogits;     // (softmax - onehot) / batch_size
};

/// Numerically stable softmax cross-entropy, averaged over the batch.
inline LossResult cross_entropy_loss(const Tensor &logits,
                                     const std::vector<int> &labels) {
  if (logits.shape.size() != 2)
    throw InputError("cross_entropy_loss: logits must be [B, classes]");
  const int B = logits.shape[0], C = logits.shape[1];
  if (B == 0)
    throw InputError("cross_entropy_loss: empty batch");
  if (static_cast<int>(labels.size()) != B)
    throw InputError("cross_entropy_loss: label count does not match batch");
  LossResult res;
  res.dlogits = Tensor({B, C});
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= C)
      throw InputError("cross_entropy_loss: label " + std::to_string(y) +
                       " out of range at row " + std::to_string(b));
    const double *row = &logits.values[static_cast<std::size_t>(b) * C];
    double m = row[0];
    for (int c = 1; c < C; ++c)
      m = std::max(m, row[c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c)
      z += std::exp(row[c] - m);
    const double logz = std::log(z);
    total += logz - (row[y] - m);
    double *grow = &res.dlogits.values[static_cast<std::size_t>(b) * C];
    for (int c = 0; c < C; ++c) {
      const double p = std::exp(row[c] - m) / z;
      grow[c] = (p - (c == y ? 1.0 : 0.0)) / B;
    }
  }
  res.value = total / B;
  return res;
}

/// Fraction of rows whose argmax logit matches the label.  Ties resolve to
/// the lowest class index.
inline double accuracy(const Tensor &logits, const std::vector<int> &labels) {
  if (logits.shape.size() != 2 ||
      static_cast<int>(labels.size()) != logits.shape[0])
    throw InputError("accuracy: shape mismatch");
  const int B = logits.shape[0], C = logits.shape[1];
  int hit = 0;
  for (int b = 0; b < B; ++b) {
    const double *row = &logits.values[static_cast<std::size_t>(b) * C];
    int arg = 0;
    for (int c = 1; c < C; ++c)
      if (row[c] > row[arg])
        arg = c;
    hit += arg == labels[b] ? 1 : 0;
  }
  return static_cast<double>(hit) / B;
}

} // namespace prunelab
