#pragma once

#include "phasectl/grid.hpp"
#include "phasectl/plant.hpp"
#include "phasectl/types.hpp"

#include <string>

namespace phasectl {

enum class Pde { allen_cahn, cahn_hilliard };
enum class Integrator { euler, heun };

Pde parse_pde(const std::string& name);
std::string to_string(Pde pde);
Integrator parse_integrator(const std::string& name);
std::string to_string(Integrator integrator);

struct ControlBounds {
  double t_max = 5.0;
  double h_max = 5.0;

  void validate() const;
};

struct ModelParams {
  Pde pde = Pde::allen_cahn;
  double mobility = 1.0;
  double gamma = 0.01;
  double dt = 0.0;  // <= 0 is replaced by auto_dt() in resolved()
  GridSpec grid;
  ControlBounds bounds;
  Integrator integrator = Integrator::euler;

  // Throws ConfigError if a field is out of range or the explicit-stability guard fails.
  void validate() const;
  // Copy with dt filled in from the stability guard when unset, then validated.
  ModelParams resolved() const;
};

// Magnitude bound on phi used by the stiffness margin of the guard.
inline constexpr double kGuardPhiMax = 2.0;
inline constexpr double kAutoDtFraction = 0.8;

// Largest dt with guard value <= 1:
//   Allen-Cahn:    M dt (4 gamma/dx^2 + s) <= 1
//   Cahn-Hilliard: M dt (64 gamma/dx^4 + 4 s/dx^2) <= 1
// where s = 12 phi_max^2 + 2 t_max is the stiffness margin of F''.
double stability_dt_limit(const ModelParams& params);
double auto_dt(const ModelParams& params);
// Guard value for the configured dt; admissible iff <= 1.
double stability_guard(const ModelParams& params);

// F(phi; T, h) = phi^4 + T phi^2 + h phi.
double energy_density(double phi, double t, double h);

// Periodic five-point Laplacian divided by dx^2.
PhaseField laplacian(const PhaseField& field);
Vector laplacian(const Vector& values, const GridSpec& grid);
Matrix laplacian_matrix(const GridSpec& grid);

PhaseField step_allen_cahn(const PhaseField& state, const ControlField& control,
                           const ModelParams& params);
PhaseField step_cahn_hilliard(const PhaseField& state, const ControlField& control,
                              const ModelParams& params);
// Dispatches on params.pde and params.integrator.
PhaseField step(const PhaseField& state, const ControlField& control, const ModelParams& params);
// Flat-vector form used on hot paths; control is the interleaved [T, h] stack.
Vector step_flat(const Vector& state, const Vector& control, const ModelParams& params);

// Phi' = drift + gain * U for the forward-Euler map.
struct AffineSplit {
  Vector drift;
  Matrix gain;  // n^2 x 2n^2
};
AffineSplit split_affine(const PhaseField& state, const ModelParams& params);

// Exact derivatives of the forward-Euler one-step map.
Jacobians analytic_jacobians(const PhaseField& state, const ControlField& control,
                             const ModelParams& params);
Jacobians analytic_jacobians(const Vector& state, const Vector& control, const ModelParams& params);

Vector control_lower_bounds(const ModelParams& params);
Vector control_upper_bounds(const ModelParams& params);
Vector clip_controls(const Vector& control, const ControlBounds& bounds);

// Wraps the stepper (and its analytic Jacobians) as a bounded black-box plant.
Plant make_plant(const ModelParams& params);

}  // namespace phasectl
