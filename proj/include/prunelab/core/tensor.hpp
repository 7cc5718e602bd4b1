// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"

namespace prunelab {

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
/// All arithmetic in the library runs in double precision; there is no
/// mixed-precision path, which keeps finite-difference checks tight.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad; // empty until ensure_grad(); same length as values

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(static_cast<std::size_t>(checked_numel(shape)), 0.0);
  }

  static Tensor from(std::vector<int> s, std::vector<double> v) {
    Tensor t;
    t.shape = std::move(s);
    if (static_cast<std::int64_t>(v.size()) != checked_numel(t.shape))
      throw ConfigError("Tensor::from: value count does not match shape");
    t.values = std::move(v);
    return t;
  }

  std::int64_t numel() const {
    return static_cast<std::int64_t>(values.size());
  }

  bool has_grad() const { return !grad.empty(); }

  void ensure_grad() {
    if (grad.size() != values.size())
      grad.assign(values.size(), 0.0);
  }

  void zero_grad() {
    if (!grad.empty())
      std::fill(grad.begin(), grad.end(), 0.0);
  }

  /// Throws StateError naming `what` if any entry is NaN or infinite.
  void assert_finite(const std::string &what) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw StateError("non-finite value in " + what + " at flat index " +
                         std::to_string(i));
  }

  /// The leading dimension is a batch count and may be zero (an empty row
  /// set); every other dimension must be positive.
  static std::int64_t checked_numel(const std::vector<int> &s) {
    std::int64_t n = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0 || (i > 0 && s[i] == 0))
        throw ConfigError("Tensor: dimensions must be positive");
      n *= s[i];
    }
    return n;
  }
};

} // namespace prunelab
