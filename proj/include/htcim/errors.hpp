// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace htcim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or an invalid axis.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an op (log of a nonpositive value).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed label hierarchy (cycle, orphan, missing root).
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent corpus records.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared in a loss term.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Version mismatch, truncation or architecture mismatch while loading a checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace htcim
