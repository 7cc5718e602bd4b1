// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/data/dataset.hpp"

namespace prunelab {

// ============================================================================
// Synthetic digit corpus
// ============================================================================
//
// Procedurally rendered digit glyphs standing in for a scanned-digit corpus:
// ten stroke templates, a random affine jitter per image (rotation, scale,
// shear, translation, stroke width), Gaussian pixel noise, quantization to
// 8-bit levels.  Quantization keeps the images exactly representable in IDX
// files, so generate -> write_idx -> load_idx is lossless.

namespace glyphs {

using Point = std::array<double, 2>; // (x, y) in the unit square, y down
using Stroke = std::vector<Point>;

inline Stroke loop(double cx, double cy, double rx, double ry, int sides = 12) {
  Stroke s;
  for (int i = 0; i <= sides; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / sides;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

inline const std::vector<std::vector<Stroke>> &digit_strokes() {
  static const std::vector<std::vector<Stroke>> strokes = [] {
    std::vector<std::vector<Stroke>> d(10);
    d[0] = {loop(0.50, 0.50, 0.22, 0.32, 16)};
    d[1] = {{{0.38, 0.28}, {0.52, 0.14}, {0.52, 0.86}},
            {{0.38, 0.86}, {0.66, 0.86}}};
    d[2] = {{{0.30, 0.30},
             {0.34, 0.18},
             {0.50, 0.13},
             {0.66, 0.18},
             {0.70, 0.32},
             {0.60, 0.48},
             {0.42, 0.62},
             {0.30, 0.76},
             {0.30, 0.86}},
            {{0.30, 0.86}, {0.72, 0.86}}};
    d[3] = {{{0.32, 0.20}, {0.48, 0.13}, {0.64, 0.20}, {0.66, 0.33}, {0.52, 0.45}},
            {{0.52, 0.45}, {0.68, 0.55}, {0.70, 0.72}, {0.54, 0.86}, {0.34, 0.80}}};
    d[4] = {{{0.60, 0.86}, {0.60, 0.14}, {0.28, 0.62}, {0.74, 0.62}}};
    d[5] = {{{0.68, 0.14},
             {0.34, 0.14},
             {0.32, 0.45},
             {0.52, 0.42},
             {0.68, 0.52},
             {0.70, 0.70},
             {0.54, 0.86},
             {0.34, 0.80}}};
    d[6] = {{{0.62, 0.14},
             {0.46, 0.24},
             {0.36, 0.42},
             {0.33, 0.62},
             {0.40, 0.80},
             {0.56, 0.86},
             {0.68, 0.76},
             {0.68, 0.62},
             {0.56, 0.52},
             {0.40, 0.56}}};
    d[7] = {{{0.28, 0.14}, {0.72, 0.14}, {0.52, 0.50}, {0.40, 0.86}}};
    d[8] = {loop(0.50, 0.31, 0.15, 0.17, 10), loop(0.50, 0.67, 0.18, 0.19, 10)};
    d[9] = {loop(0.50, 0.33, 0.17, 0.18, 10),
            {{0.67, 0.36}, {0.64, 0.60}, {0.52, 0.86}}};
    return d;
  }();
  return strokes;
}

inline double segment_distance(double px, double py, const Point &a,
                               const Point &b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  const double ex = px - (a[0] + t * dx), ey = py - (a[1] + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

} // namespace glyphs

/// Renders `n` jittered digit images of shape [n, 1, size, size] with labels
/// assigned round-robin over 0..9.  `noise` is the per-pixel Gaussian sigma
/// added before quantization.
inline Dataset gen_digits(int n, int size, double noise, std::uint64_t seed) {
  if (n <= 0)
    throw InputError("gen_digits: n must be positive");
  if (size < 8)
    throw InputError("gen_digits: size must be at least 8");
  if (noise < 0.0)
    throw InputError("gen_digits: noise must be non-negative");
  Rng rng(seed);
  Dataset ds;
  ds.classes = 10;
  ds.inputs = Tensor({n, 1, size, size});
  ds.labels.resize(static_cast<std::size_t>(n));
  std::vector<glyphs::Point> pts;
  std::vector<std::pair<int, int>> seg_of_stroke; // (first point, count)
  for (int img = 0; img < n; ++img) {
    const int digit = img % 10;
    ds.labels[static_cast<std::size_t>(img)] = digit;

    const double phi = rng.uniform(-0.25, 0.25);
    const double scale = rng.uniform(0.85, 1.12);
    const double shear = rng.uniform(-0.15, 0.15);
    const double tx = rng.uniform(-0.08, 0.08);
    const double ty = rng.uniform(-0.08, 0.08);
    const double width = rng.uniform(0.050, 0.085);
    const double c = std::cos(phi), s = std::sin(phi);

    pts.clear();
    seg_of_stroke.clear();
    for (const auto &stroke : glyphs::digit_strokes()[digit]) {
      seg_of_stroke.emplace_back(static_cast<int>(pts.size()),
                                 static_cast<int>(stroke.size()));
      for (const auto &p : stroke) {
        const double dx = p[0] - 0.5, dy = p[1] - 0.5;
        pts.push_back({scale * (c * dx - s * dy + shear * dy) + 0.5 + tx,
                       scale * (s * dx + c * dy) + 0.5 + ty});
      }
    }

    double *px = &ds.inputs.values[static_cast<std::size_t>(img) * size * size];
    for (int iy = 0; iy < size; ++iy) {
      for (int ix = 0; ix < size; ++ix) {
        const double x = (ix + 0.5) / size, y = (iy + 0.5) / size;
        double d = 1e9;
        for (const auto &[first, count] : seg_of_stroke)
          for (int k = 0; k + 1 < count; ++k)
            d = std::min(d, glyphs::segment_distance(x, y, pts[first + k],
                                                     pts[first + k + 1]));
        double v = std::exp(-(d / width) * (d / width));
        v += noise * rng.normal();
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        // 8-bit quantization so the corpus is IDX-exact.
        px[iy * size + ix] = std::lround(v * 255.0) / 255.0;
      }
    }
  }
  return ds;
}

} // namespace prunelab
