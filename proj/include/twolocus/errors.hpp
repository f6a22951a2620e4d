#pragma once

#include <stdexcept>
#include <string>

namespace twolocus {

// Argument lies outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A simulation or experiment configuration is unusable.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Query outside the range covered by recorded data.
class RangeError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

// Subtype ledger disagrees with the aggregate population counts.
class InvalidLedger : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Phase schedule cannot be evaluated for the given parameters.
class ScheduleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Output could not be written or input could not be read.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace twolocus
