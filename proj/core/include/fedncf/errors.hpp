#pragma once

#include <stdexcept>
#include <string>

namespace fedncf {

// Error categories map 1:1 onto the CLI exit codes: ConfigError -> 1,
// DataError -> 2, RunError -> 3.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class RunError : public std::runtime_error {
 public:
  explicit RunError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fedncf
