#pragma once

#include <stdexcept>
#include <string>

namespace ridematch {

/// No path exists between two snapped nodes.
class NoRouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is well-formed but carries no usable signal (all-zero dataset,
/// zero vector that must be normalized, empty index input).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed external file: missing CSV column, bad network JSON.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ridematch
