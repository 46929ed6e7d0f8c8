#pragma once

#include <stdexcept>
#include <string>

namespace gazeattn {

// Base class for every error the library raises. The stage name ends up in
// CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Malformed input files (CLI exit code 1).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A domain invariant was violated, either on construction or by a pipeline
// stage (CLI exit code 3).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace gazeattn
