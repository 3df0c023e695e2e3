#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace shersim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidAxisError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (e.g. asked for the desired force
/// of an inactive axis).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Non-finite value detected inside the tick loop.
class NumericalFault : public Error {
 public:
  NumericalFault(std::string stage, const std::string& detail)
      : Error("non-finite value at stage '" + stage + "': " + detail),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Scenario validation failure; `path()` is a JSON path such as `$.scene.radius`.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string message, const std::string& source = {})
      : Error((source.empty() ? "" : source + ":") + "line " + std::to_string(line) + ": " + message),
        line_(line),
        message_(std::move(message)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace shersim
