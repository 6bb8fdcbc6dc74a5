#pragma once

#include <stdexcept>
#include <string>

namespace cvarsim {

// Caller passed a value outside an operation's validity range.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A config file or CLI invocation is malformed (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal contract was broken; indicates a bug (exit code 3).
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace cvarsim
