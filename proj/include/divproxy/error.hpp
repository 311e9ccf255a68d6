// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace divproxy {

// Error taxonomy. The CLI maps each family onto an exit code:
// UsageError -> 2, ProviderError -> 3, DataError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class ProtocolError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class CacheMissError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Cosine distance against a zero vector, and similar inputs with no defined result.
class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

class TrainingDivergenceError : public DataError {
 public:
  TrainingDivergenceError(const std::string& what, int epoch)
      : DataError(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace divproxy
