#pragma once

#include <string>

#include "curvseg/grid.hpp"

namespace curvseg {

/// Operator plugged into the solver in place of the box projection once the
/// iterate is close to binary. Input and output are fields of identical dims
/// with values in [0, 1]; the solver checks the output and raises
/// ErrorCode::ReconnectorContract otherwise.
class Reconnector {
 public:
  virtual ~Reconnector() = default;

  virtual ScalarField apply(const ScalarField& u) = 0;
  virtual std::string name() const = 0;
};

/// Returns its input unchanged.
class IdentityReconnector final : public Reconnector {
 public:
  ScalarField apply(const ScalarField& u) override { return u; }
  std::string name() const override { return "identity"; }
};

}  // namespace curvseg
