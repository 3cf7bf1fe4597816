#pragma once

#include <stdexcept>
#include <string>

namespace m2m {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: validation 2, numeric 3, I/O 4.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitNumeric = 3,
  kExitIo = 4,
};

}  // namespace m2m
