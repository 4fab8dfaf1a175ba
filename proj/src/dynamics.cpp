#include "phasectl/dynamics.hpp"

#include "phasectl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phasectl {

Pde parse_pde(const std::string& name) {
  if (name == "allen-cahn" || name == "ac") return Pde::allen_cahn;
  if (name == "cahn-hilliard" || name == "ch") return Pde::cahn_hilliard;
  throw ConfigError("unknown pde '" + name + "' (allen-cahn, cahn-hilliard)");
}

std::string to_string(Pde pde) {
  return pde == Pde::allen_cahn ? "allen-cahn" : "cahn-hilliard";
}

Integrator parse_integrator(const std::string& name) {
  if (name == "euler") return Integrator::euler;
  if (name == "heun") return Integrator::heun;
  throw ConfigError("unknown integrator '" + name + "' (euler, heun)");
}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::euler ? "euler" : "heun";
}

void ControlBounds::validate() const {
  if (!(t_max > 0.0) || !(h_max > 0.0)) {
    throw ConfigError("control bounds must be strictly positive");
  }
}

namespace {

double stiffness_margin(const ModelParams& p) {
  return 12.0 * kGuardPhiMax * kGuardPhiMax + 2.0 * p.bounds.t_max;
}

// Guard value per unit of M*dt.
double guard_rate(const ModelParams& p) {
  const double dx2 = p.grid.dx * p.grid.dx;
  if (p.pde == Pde::allen_cahn) return 4.0 * p.gamma / dx2 + stiffness_margin(p);
  return 64.0 * p.gamma / (dx2 * dx2) + 4.0 * stiffness_margin(p) / dx2;
}

}  // namespace

double stability_dt_limit(const ModelParams& params) {
  return 1.0 / (params.mobility * guard_rate(params));
}

double auto_dt(const ModelParams& params) { return kAutoDtFraction * stability_dt_limit(params); }

double stability_guard(const ModelParams& params) {
  return params.mobility * params.dt * guard_rate(params);
}

void ModelParams::validate() const {
  grid.validate();
  bounds.validate();
  if (!(mobility > 0.0)) throw ConfigError("mobility M must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("gradient coefficient gamma must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("time step dt must be positive (or auto)");
  const double g = stability_guard(*this);
  if (g > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "explicit stability guard violated for " << to_string(pde) << ": M*dt*rate = " << g
        << " > 1 (dt = " << dt << ", largest admissible dt = " << stability_dt_limit(*this)
        << ")";
    throw ConfigError(msg.str());
  }
}

ModelParams ModelParams::resolved() const {
  ModelParams out = *this;
  if (!(out.dt > 0.0)) {
    out.grid.validate();
    out.bounds.validate();
    if (!(out.mobility > 0.0)) throw ConfigError("mobility M must be positive");
    out.dt = auto_dt(out);
  }
  out.validate();
  return out;
}

double energy_density(double phi, double t, double h) {
  const double phi2 = phi * phi;
  return phi2 * phi2 + t * phi2 + h * phi;
}

Vector laplacian(const Vector& f, const GridSpec& grid) {
  const int n = grid.n;
  const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
  Vector out(n * n);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    for (int j = 0; j < n; ++j) {
      const int jp = (j + 1) % n;
      const int jm = (j + n - 1) % n;
      const double nb = f[ip * n + j] + f[im * n + j] + f[i * n + jp] + f[i * n + jm];
      out[i * n + j] = (nb - 4.0 * f[i * n + j]) * inv_dx2;
    }
  }
  return out;
}

PhaseField laplacian(const PhaseField& field) {
  return PhaseField(field.spec(), laplacian(field.values(), field.spec()));
}

Matrix laplacian_matrix(const GridSpec& grid) {
  const int n = grid.n;
  const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
  Matrix L = Matrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k = i * n + j;
      L(k, k) -= 4.0 * inv_dx2;
      // += so that n == 2, where both neighbours coincide, is counted twice.
      L(k, wrap(i + 1, n) * n + j) += inv_dx2;
      L(k, wrap(i - 1, n) * n + j) += inv_dx2;
      L(k, i * n + wrap(j + 1, n)) += inv_dx2;
      L(k, i * n + wrap(j - 1, n)) += inv_dx2;
    }
  }
  return L;
}

namespace {

void check_shapes(const Vector& state, const Vector& control, const GridSpec& grid) {
  if (state.size() != grid.cells() || control.size() != grid.control_dim()) {
    throw ConfigError("state/control size does not match the " + std::to_string(grid.n) + "x" +
                      std::to_string(grid.n) + " grid");
  }
}

void check_finite(const Vector& out, const GridSpec& grid) {
  for (int k = 0; k < out.size(); ++k) {
    if (!std::isfinite(out[k])) {
      auto [i, j] = unflatten(k, grid.n);
      throw BlowupError("numerical blowup: non-finite phase value at cell (" + std::to_string(i) +
                            ", " + std::to_string(j) + ")",
                        i, j);
    }
  }
}

// One forward-Euler step, without the finiteness check.
Vector euler_update(const Vector& phi, const Vector& u, const ModelParams& p) {
  const int n = p.grid.n;
  const int cells = n * n;
  const double mdt = p.mobility * p.dt;
  const Vector lap = laplacian(phi, p.grid);
  Vector out(cells);
  if (p.pde == Pde::allen_cahn) {
    for (int k = 0; k < cells; ++k) {
      const double f = phi[k];
      out[k] = f - mdt * (4.0 * f * f * f + 2.0 * u[2 * k] * f + u[2 * k + 1] - p.gamma * lap[k]);
    }
    return out;
  }
  Vector mu(cells);
  for (int k = 0; k < cells; ++k) {
    const double f = phi[k];
    mu[k] = -(4.0 * f * f * f + 2.0 * u[2 * k] * f + u[2 * k + 1] - p.gamma * lap[k]);
  }
  const Vector lap_mu = laplacian(mu, p.grid);
  for (int k = 0; k < cells; ++k) out[k] = phi[k] - mdt * lap_mu[k];
  return out;
}

}  // namespace

Vector step_flat(const Vector& state, const Vector& control, const ModelParams& params) {
  check_shapes(state, control, params.grid);
  Vector out = euler_update(state, control, params);
  if (params.integrator == Integrator::heun) {
    // Trapezoidal average of the two Euler slopes.
    out = 0.5 * (state + euler_update(out, control, params));
  }
  check_finite(out, params.grid);
  return out;
}

PhaseField step(const PhaseField& state, const ControlField& control, const ModelParams& params) {
  if (!(state.spec() == params.grid) || !(control.spec() == params.grid)) {
    throw ConfigError("state/control grid does not match model grid");
  }
  return PhaseField(params.grid, step_flat(state.values(), control.stacked(), params));
}

PhaseField step_allen_cahn(const PhaseField& state, const ControlField& control,
                           const ModelParams& params) {
  ModelParams p = params;
  p.pde = Pde::allen_cahn;
  return step(state, control, p);
}

PhaseField step_cahn_hilliard(const PhaseField& state, const ControlField& control,
                              const ModelParams& params) {
  ModelParams p = params;
  p.pde = Pde::cahn_hilliard;
  return step(state, control, p);
}

namespace {

void require_euler(const ModelParams& p, const char* what) {
  if (p.integrator != Integrator::euler) {
    throw ConfigError(std::string(what) + " is defined for the forward-Euler map only");
  }
}

}  // namespace

AffineSplit split_affine(const PhaseField& state, const ModelParams& params) {
  require_euler(params, "split_affine");
  const GridSpec& g = params.grid;
  const int cells = g.cells();
  const double mdt = params.mobility * params.dt;
  const Vector& phi = state.values();

  AffineSplit out;
  out.drift = step_flat(phi, Vector::Zero(g.control_dim()), params);
  out.gain = Matrix::Zero(cells, g.control_dim());
  if (params.pde == Pde::allen_cahn) {
    for (int k = 0; k < cells; ++k) {
      out.gain(k, 2 * k) = -mdt * 2.0 * phi[k];
      out.gain(k, 2 * k + 1) = -mdt;
    }
    return out;
  }
  const Matrix L = laplacian_matrix(g);
  for (int k = 0; k < cells; ++k) {
    out.gain.col(2 * k) = mdt * 2.0 * phi[k] * L.col(k);
    out.gain.col(2 * k + 1) = mdt * L.col(k);
  }
  return out;
}

Jacobians analytic_jacobians(const Vector& phi, const Vector& u, const ModelParams& params) {
  require_euler(params, "analytic_jacobians");
  const GridSpec& g = params.grid;
  check_shapes(phi, u, g);
  const int cells = g.cells();
  const double mdt = params.mobility * params.dt;
  const Matrix L = laplacian_matrix(g);

  Vector curvature(cells);  // F''(phi) = 12 phi^2 + 2T
  for (int k = 0; k < cells; ++k) curvature[k] = 12.0 * phi[k] * phi[k] + 2.0 * u[2 * k];

  Jacobians J;
  J.B = Matrix::Zero(cells, g.control_dim());
  if (params.pde == Pde::allen_cahn) {
    J.A = mdt * params.gamma * L;
    for (int k = 0; k < cells; ++k) {
      J.A(k, k) += 1.0 - mdt * curvature[k];
      J.B(k, 2 * k) = -mdt * 2.0 * phi[k];
      J.B(k, 2 * k + 1) = -mdt;
    }
    return J;
  }
  // A = I + M dt L (diag(F'') - gamma L)
  Matrix inner = -params.gamma * L;
  inner.diagonal() += curvature;
  J.A = mdt * (L * inner);
  J.A.diagonal().array() += 1.0;
  for (int k = 0; k < cells; ++k) {
    J.B.col(2 * k) = mdt * 2.0 * phi[k] * L.col(k);
    J.B.col(2 * k + 1) = mdt * L.col(k);
  }
  return J;
}

Jacobians analytic_jacobians(const PhaseField& state, const ControlField& control,
                             const ModelParams& params) {
  return analytic_jacobians(state.values(), control.stacked(), params);
}

Vector control_lower_bounds(const ModelParams& params) { return -control_upper_bounds(params); }

Vector control_upper_bounds(const ModelParams& params) {
  Vector hi(params.grid.control_dim());
  for (int k = 0; k < params.grid.cells(); ++k) {
    hi[2 * k] = params.bounds.t_max;
    hi[2 * k + 1] = params.bounds.h_max;
  }
  return hi;
}

Vector clip_controls(const Vector& control, const ControlBounds& bounds) {
  Vector out = control;
  for (Eigen::Index k = 0; k + 1 < out.size(); k += 2) {
    out[k] = std::clamp(out[k], -bounds.t_max, bounds.t_max);
    out[k + 1] = std::clamp(out[k + 1], -bounds.h_max, bounds.h_max);
  }
  return out;
}

Plant make_plant(const ModelParams& params) {
  ModelParams p = params.resolved();
  Plant plant;
  plant.state_dim = p.grid.cells();
  plant.control_dim = p.grid.control_dim();
  plant.step = [p](int, const Vector& x, const Vector& u) { return step_flat(x, u, p); };
  if (p.integrator == Integrator::euler) {
    plant.jacobians = [p](int, const Vector& x, const Vector& u) {
      return analytic_jacobians(x, u, p);
    };
  }
  plant.u_min = control_lower_bounds(p);
  plant.u_max = control_upper_bounds(p);
  return plant;
}

}  // namespace phasectl
