#pragma once

#include <stdexcept>
#include <string>

namespace sdiag {

/// An iterative numerical method did not reach its tolerance.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Left/right eigenvalue matching found more than one candidate.
class ambiguity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdiag
