#pragma once

#include "madapter/real.hpp"

#include <stdexcept>
#include <string>

namespace madapter {
inline namespace MADAPTER_NS {

/// Operand shapes do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A pooling stage received a sequence shorter than its kernel allows.
class LengthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed checkpoint or dataset file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace MADAPTER_NS
}  // namespace madapter
