// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace optoqst {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation on an argument (bad index, bad dimension, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the dynamically stable / normalizable regime.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, int cell) : Error(what), cell_(cell) {}
  int cell() const noexcept { return cell_; }

 private:
  int cell_;
};

/// Hilbert space larger than the configured guard.
class DimensionLimitError : public Error {
 public:
  using Error::Error;
};

/// Integrator gave up or a truncation study did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or schema-violating experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace optoqst
