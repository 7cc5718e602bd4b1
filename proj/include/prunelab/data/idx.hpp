// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/data/dataset.hpp"

namespace prunelab {

// ============================================================================
// IDX image corpus I/O
// ============================================================================
//
// The classic big-endian layout: image files carry magic 0x00000803, count,
// rows, cols, then unsigned bytes; label files carry magic 0x00000801, count,
// then one byte per label.  Loaded pixels are scaled to [0, 1]; an optional
// pass re-centers the whole corpus to mean 0 / std 1.

enum class IdxNormalize { scale01, standardize };

namespace detail {

inline std::vector<std::uint8_t> read_all(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw InputError("cannot open IDX file: " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

inline std::uint32_t be32(const std::vector<std::uint8_t> &b, std::size_t off,
                          const std::string &path) {
  if (off + 4 > b.size())
    throw FormatError(path + ": truncated at offset " + std::to_string(off));
  return (static_cast<std::uint32_t>(b[off]) << 24) |
         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) |
         static_cast<std::uint32_t>(b[off + 3]);
}

inline void put_be32(std::ofstream &f, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  f.write(bytes, 4);
}

} // namespace detail

inline Dataset load_idx(const std::string &images_path,
                        const std::string &labels_path,
                        IdxNormalize norm = IdxNormalize::scale01) {
  const auto img = detail::read_all(images_path);
  const auto lab = detail::read_all(labels_path);

  const std::uint32_t img_magic = detail::be32(img, 0, images_path);
  if (img_magic != 0x00000803u)
    throw FormatError(images_path + ": bad image magic at offset 0 (got " +
                      std::to_string(img_magic) + ", want 2051)");
  const std::uint32_t n = detail::be32(img, 4, images_path);
  const std::uint32_t rows = detail::be32(img, 8, images_path);
  const std::uint32_t cols = detail::be32(img, 12, images_path);
  const std::size_t need = 16 + static_cast<std::size_t>(n) * rows * cols;
  if (img.size() != need)
    throw FormatError(images_path + ": expected " + std::to_string(need) +
                      " bytes, found " + std::to_string(img.size()) +
                      " (payload begins at offset 16)");

  const std::uint32_t lab_magic = detail::be32(lab, 0, labels_path);
  if (lab_magic != 0x00000801u)
    throw FormatError(labels_path + ": bad label magic at offset 0 (got " +
                      std::to_string(lab_magic) + ", want 2049)");
  const std::uint32_t ln = detail::be32(lab, 4, labels_path);
  if (ln != n)
    throw FormatError(labels_path + ": label count " + std::to_string(ln) +
                      " does not match image count " + std::to_string(n));
  if (lab.size() != 8 + static_cast<std::size_t>(ln))
    throw FormatError(labels_path + ": truncated at offset " +
                      std::to_string(lab.size()));

  Dataset ds;
  ds.inputs = Tensor({static_cast<int>(n), 1, static_cast<int>(rows),
                      static_cast<int>(cols)});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < ds.inputs.values.size(); ++i)
    ds.inputs.values[i] = static_cast<double>(img[16 + i]) / 255.0;
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.classes = max_label + 1;

  if (norm == IdxNormalize::standardize) {
    double mean = 0.0;
    for (double v : ds.inputs.values)
      mean += v;
    mean /= static_cast<double>(ds.inputs.values.size());
    double var = 0.0;
    for (double v : ds.inputs.values)
      var += (v - mean) * (v - mean);
    var /= static_cast<double>(ds.inputs.values.size());
    const double sd = std::sqrt(var);
    if (sd < 1e-12)
      throw InputError(images_path + ": cannot standardize constant images");
    for (double &v : ds.inputs.values)
      v = (v - mean) / sd;
  }
  return ds;
}

/// Writes a [N,1,H,W] dataset with values in [0,1] back to the IDX pair.
/// Pixels are quantized with round(v * 255), so a dataset loaded with
/// scale01 writes back byte-identical files.
inline void write_idx(const std::string &images_path,
                      const std::string &labels_path, const Dataset &ds) {
  if (ds.inputs.shape.size() != 4 || ds.inputs.shape[1] != 1)
    throw InputError("write_idx: dataset must be [N,1,H,W]");
  for (double v : ds.inputs.values)
    if (!(v >= 0.0 && v <= 1.0))
      throw InputError("write_idx: pixel values must lie in [0,1] "
                       "(standardized data cannot round-trip)");
  std::ofstream fi(images_path, std::ios::binary | std::ios::trunc);
  if (!fi)
    throw InputError("cannot open for writing: " + images_path);
  detail::put_be32(fi, 0x00000803u);
  detail::put_be32(fi, static_cast<std::uint32_t>(ds.inputs.shape[0]));
  detail::put_be32(fi, static_cast<std::uint32_t>(ds.inputs.shape[2]));
  detail::put_be32(fi, static_cast<std::uint32_t>(ds.inputs.shape[3]));
  for (double v : ds.inputs.values)
    fi.put(static_cast<char>(
        static_cast<std::uint8_t>(std::lround(v * 255.0))));

  std::ofstream fl(labels_path, std::ios::binary | std::ios::trunc);
  if (!fl)
    throw InputError("cannot open for writing: " + labels_path);
  detail::put_be32(fl, 0x00000801u);
  detail::put_be32(fl, static_cast<std::uint32_t>(ds.labels.size()));
  for (int l : ds.labels)
    fl.put(static_cast<char>(static_cast<std::uint8_t>(l)));
  if (!fi || !fl)
    throw InputError("write_idx: short write");
}

} // namespace prunelab
