#pragma once

#include <stdexcept>
#include <string>

namespace rsoinv {

// Bad input: malformed files, violated preconditions, missing labels.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-finite results, degenerate fits or decompositions.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void throw_input(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace rsoinv
