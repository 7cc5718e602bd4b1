// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/data/dataset.hpp"

namespace prunelab {

/// Loads a tabular dataset from CSV.  The first row is a header; one column
/// must be named "label" (any position) and hold integer class ids, every
/// other column is a numeric feature.  Rows become [N, F] inputs in file
/// order.
inline Dataset load_csv(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw InputError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(f, line))
    throw FormatError(path + ": empty file, header row required");

  auto split_row = [](const std::string &row) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(row);
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (!row.empty() && row.back() == ',')
      cells.push_back("");
    return cells;
  };

  const auto header = split_row(line);
  int label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "label")
      label_col = static_cast<int>(i);
  if (label_col < 0)
    throw FormatError(path + ": header has no 'label' column");
  const int features = static_cast<int>(header.size()) - 1;
  if (features < 1)
    throw FormatError(path + ": no feature columns");

  std::vector<double> flat;
  std::vector<int> labels;
  int row_no = 1;
  while (std::getline(f, line)) {
    ++row_no;
    if (line.empty())
      continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw FormatError(path + ": row " + std::to_string(row_no) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != cells[c].size())
        throw FormatError(path + ": non-numeric cell at row " +
                          std::to_string(row_no) + ", column '" +
                          header[c] + "'");
      if (static_cast<int>(c) == label_col)
        labels.push_back(static_cast<int>(v));
      else
        flat.push_back(v);
    }
  }
  if (labels.empty())
    throw FormatError(path + ": no data rows");

  Dataset ds;
  ds.inputs =
      Tensor::from({static_cast<int>(labels.size()), features}, std::move(flat));
  ds.labels = std::move(labels);
  int max_label = 0;
  for (int l : ds.labels) {
    if (l < 0)
      throw FormatError(path + ": negative label");
    max_label = std::max(max_label, l);
  }
  ds.classes = max_label + 1;
  return ds;
}

} // namespace prunelab
