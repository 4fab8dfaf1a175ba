#pragma once

#include "phasectl/types.hpp"

#include <functional>

namespace phasectl {

// Black-box discrete-time system x_{t+1} = step(t, x_t, u_t) with optional box bounds on u.
// The phase-field models are one instance; tests plug in linear and scalar systems.
struct Plant {
  using StepFn = std::function<Vector(int t, const Vector& x, const Vector& u)>;
  using JacobianFn = std::function<Jacobians(int t, const Vector& x, const Vector& u)>;

  int state_dim = 0;
  int control_dim = 0;
  StepFn step;
  JacobianFn jacobians;  // empty when no analytic model is available
  Vector u_min;          // empty means unbounded
  Vector u_max;

  bool bounded() const { return u_min.size() == control_dim && u_max.size() == control_dim; }

  Vector clip(const Vector& u) const {
    if (!bounded()) return u;
    return u.cwiseMax(u_min).cwiseMin(u_max);
  }
};

}  // namespace phasectl
