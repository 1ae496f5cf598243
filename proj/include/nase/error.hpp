#pragma once

#include <stdexcept>
#include <string>

namespace nase {

// Base class for all library failures. category() is a stable lowercase tag
// the CLI uses to label errors and pick exit codes.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& what) : Error("unsupported", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

struct DegenerateSignalError : Error {
  explicit DegenerateSignalError(const std::string& what) : Error("degenerate", what) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& what) : Error("training", what) {}
};

struct StateError : Error {
  explicit StateError(const std::string& what) : Error("state", what) {}
};

struct KeyError : Error {
  explicit KeyError(const std::string& what) : Error("key", what) {}
};

struct AuthError : Error {
  explicit AuthError(const std::string& what) : Error("auth", what) {}
};

}  // namespace nase
