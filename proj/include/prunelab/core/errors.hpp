// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace prunelab {

/// Bad user-supplied value (out-of-range argument, impossible request).
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Structurally invalid configuration (shape mismatch, collapsed layer).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Operation called in the wrong order (backward before forward, stale mask).
class StateError : public std::runtime_error {
public:
  explicit StateError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Malformed serialized payload (checkpoint, IDX, CSV).
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace prunelab
