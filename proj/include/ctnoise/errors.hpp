#pragma once

#include <stdexcept>
#include <string>

namespace ctnoise {

/// A configuration or phantom description failed validation.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation hit a degenerate case (for example sigma^2 == 0).
class NumericalError : public std::domain_error {
 public:
  explicit NumericalError(const std::string& what) : std::domain_error(what) {}
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ctnoise
