#pragma once

#include <stdexcept>
#include <string>

namespace becmf {

/// Machine-readable failure category carried by every library exception.
enum class ErrorKind {
  InvalidArgument,
  GridMismatch,
  Convergence,
  Degeneracy,
  OccupancyDivergence,
  TemperatureRange,
  UnderResolution,
  Divergence,
  Config,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Schema violation in a configuration document; `key` is the JSON path of
/// the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(ErrorKind::Config, message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace becmf
