#pragma once

#include <stdexcept>
#include <string>

namespace evalkit {

/// Base for all library errors. The exit code is what the CLI returns for it.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Bad configuration: missing or malformed config, rules, stopword files, invalid regex.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 1) {}
};

/// Bad input data: parse errors, duplicate ids, invalid labels, empty partitions.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 2) {}
};

/// Syntax checker infrastructure failure (checker not found, spawn failure).
/// Distinct from a snippet that simply fails the check.
class CheckerError : public Error {
 public:
  explicit CheckerError(const std::string& what) : Error(what, 3) {}
};

}  // namespace evalkit
