#pragma once

#include <stdexcept>
#include <string>

namespace spectrumkit {

/// Bad shapes, out-of-range legs, zero tensors, malformed weights.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An optimization problem with an empty feasible set.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear program whose objective is unbounded below.
class Unbounded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured size cap (edge count, iteration budget) was exceeded.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}
}  // namespace detail

}  // namespace spectrumkit
