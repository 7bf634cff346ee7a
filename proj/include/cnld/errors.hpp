#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnld {

/// Wrong number of parameters, angles or vector entries.
class StructuralError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Image or coefficient shapes that do not fit the transform.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A backward pass was requested without a matching forward cache.
class StateError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class FormatError : public std::runtime_error {
public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// Non-finite objective during an iterative solve.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

private:
  long iteration_;
};

}  // namespace cnld
