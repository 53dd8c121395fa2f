#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

// Invalid arguments are reported with std::invalid_argument throughout; the
// types below cover the failure classes callers need to tell apart.

class SingularConditioning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed parameter sheet, experiment spec or CLI configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qnd
