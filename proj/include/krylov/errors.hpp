#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace krylov {

// Precondition violations: dimension mismatches, invalid configuration.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The operator (or preconditioner) is not positive definite.
class DefinitenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A recurrence produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace krylov
