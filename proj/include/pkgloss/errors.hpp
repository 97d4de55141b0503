#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace pkgloss {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent configuration. Carries the key path and the
/// source line when they are known (line 0 means "not from a file").
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {}, int line = 0)
      : std::runtime_error(format(message, key, line)), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& message, const std::string& key, int line) {
    std::string out = message;
    if (!key.empty()) out += " [key: " + key + "]";
    if (line > 0) out += " [line " + std::to_string(line) + "]";
    return out;
  }

  std::string key_;
  int line_;
};

/// Iterative solve that did not reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& message, double achieved_residual, int iterations)
      : std::runtime_error(message + " (relative residual " + std::to_string(achieved_residual) +
                           " after " + std::to_string(iterations) + " iterations)"),
        residual_(achieved_residual),
        iterations_(iterations) {}

  double achieved_residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Bundled data failed its checksum or could not be read.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& what) {
  if (!condition) throw DomainError(what);
}

inline double require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw DomainError(std::string(name) + " must be positive and finite");
  return value;
}

inline double require_non_negative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw DomainError(std::string(name) + " must be non-negative and finite");
  return value;
}

}  // namespace detail
}  // namespace pkgloss
