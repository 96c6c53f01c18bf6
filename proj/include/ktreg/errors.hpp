#pragma once

#include <stdexcept>
#include <string>

namespace ktreg {

// Bad arguments, malformed input files, inadmissible sizes. CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization failures and other floating-point breakdowns. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or unwritable files. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ktreg
