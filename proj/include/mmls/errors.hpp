#pragma once

#include <stdexcept>
#include <string>

namespace mmls {

/// Base error for the library. `code()` is a stable machine-readable tag;
/// the CLI prints it as `error: <code>: <message>`.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Not enough points for a requested operation.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& message, long required, long available)
      : Error("insufficient-data", message), required_(required), available_(available) {}
  long required() const noexcept { return required_; }
  long available() const noexcept { return available_; }

 private:
  long required_;
  long available_;
};

/// Data does not span the requested rank.
class DegenerateDataError : public Error {
 public:
  DegenerateDataError(const std::string& message, long rank_achieved)
      : Error("degenerate-data", message), rank_achieved_(rank_achieved) {}
  DegenerateDataError(std::string code, const std::string& message, long rank_achieved)
      : Error(std::move(code), message), rank_achieved_(rank_achieved) {}
  long rank_achieved() const noexcept { return rank_achieved_; }

 private:
  long rank_achieved_;
};

/// A local neighborhood is too sparse or degenerate for the requested fit.
class DegenerateNeighborhoodError : public DegenerateDataError {
 public:
  DegenerateNeighborhoodError(const std::string& message, long rank_achieved)
      : DegenerateDataError("degenerate-neighborhood", message, rank_achieved) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message) : Error("domain", message) {}
};

/// Malformed input file; `row()` is the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long row)
      : Error("parse", message), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

}  // namespace mmls
