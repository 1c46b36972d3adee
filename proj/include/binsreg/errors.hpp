#pragma once

#include <stdexcept>
#include <string>

namespace binsreg {

/// Invalid options or option combinations (bad (p,s,v), unknown flags, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problems with the input data: unreadable files, missing columns,
/// too few observations, empty bins.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace binsreg
