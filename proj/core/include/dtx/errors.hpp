#pragma once

#include <stdexcept>
#include <string>

namespace dtx {

struct DimensionTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SequenceTooShort : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InsufficientData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModelNotFitted : std::logic_error {
  using std::logic_error::logic_error;
};

struct NonfiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoRequests : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown by the config parser; carries the offending line (1-based, 0 = file level).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  int line_number;
};

}  // namespace dtx
