#include "doctest.h"
#include "helpers.hpp"

#include "phasectl/dynamics.hpp"
#include "phasectl/errors.hpp"

using namespace phasectl;
using testing::random_vector;

namespace {

ModelParams raw_params(Pde pde, int n, double gamma, double dt) {
  ModelParams p;
  p.pde = pde;
  p.grid.n = n;
  p.gamma = gamma;
  p.dt = dt;
  return p;
}

Vector shift(const Vector& f, int n, int di, int dj, int stride = 1) {
  Vector out(f.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < stride; ++s)
        out[(wrap(i + di, n) * n + wrap(j + dj, n)) * stride + s] = f[(i * n + j) * stride + s];
  return out;
}

// Central finite differences of the stepper, column by column.
Jacobians fd_jacobians(const Vector& x, const Vector& u, const ModelParams& p, double h) {
  Jacobians J{Matrix(x.size(), x.size()), Matrix(x.size(), u.size())};
  for (int c = 0; c < x.size(); ++c) {
    Vector xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    J.A.col(c) = (step_flat(xp, u, p) - step_flat(xm, u, p)) / (2 * h);
  }
  for (int c = 0; c < u.size(); ++c) {
    Vector up = u, um = u;
    up[c] += h;
    um[c] -= h;
    J.B.col(c) = (step_flat(x, up, p) - step_flat(x, um, p)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("energy density examples") {
  CHECK(energy_density(0, 5, 3) == 0.0);
  CHECK(energy_density(1, -2, 0) == -1.0);
  CHECK(energy_density(-1, -2, 1) == -2.0);
}

TEST_CASE("laplacian of a uniform field is zero") {
  const PhaseField f = PhaseField::constant(GridSpec{5, 0.7}, 0.3);
  CHECK(laplacian(f).values().cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("laplacian of a delta on 4x4 wraps") {
  Vector v = Vector::Zero(16);
  v[0] = 1.0;
  const PhaseField out = laplacian(PhaseField(GridSpec{4, 1.0}, v));
  CHECK(out(0, 0) == -4.0);
  CHECK(out(0, 1) == 1.0);
  CHECK(out(1, 0) == 1.0);
  CHECK(out(0, 3) == 1.0);
  CHECK(out(3, 0) == 1.0);
  CHECK(out.values().cwiseAbs().sum() == 8.0);
}

TEST_CASE("laplacian sums to zero and matches its matrix") {
  const GridSpec g{6, 0.5};
  const Vector f = random_vector(36, 3);
  CHECK(std::abs(laplacian(f, g).sum()) < 1e-12);
  CHECK((laplacian_matrix(g) * f - laplacian(f, g)).cwiseAbs().maxCoeff() < 1e-12);
  // n = 2: each neighbour appears twice.
  const GridSpec g2{2, 1.0};
  const Vector f2 = random_vector(4, 4);
  CHECK((laplacian_matrix(g2) * f2 - laplacian(f2, g2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("allen-cahn fixed points") {
  const ModelParams p = testing::ac_params(5);
  for (double phi : {-1.0, 0.0, 1.0}) {
    const PhaseField s = PhaseField::constant(p.grid, phi);
    const PhaseField out = step(s, ControlField::uniform(p.grid, -2.0, 0.0), p);
    CHECK((out.values().array() == phi).all());
  }
  const PhaseField z = PhaseField::zeros(p.grid);
  CHECK(step(z, ControlField::uniform(p.grid, 3.7, 0.0), p).values().isZero(0.0));
}

TEST_CASE("allen-cahn 3x3 bump by hand") {
  // centre 0.5 - 0.01 * (4 * 0.125 - (-2)) = 0.475; edge 0 - 0.01 * (0 - 0.5) = 0.005.
  const ModelParams p = raw_params(Pde::allen_cahn, 3, 1.0, 0.01);
  Vector v = Vector::Zero(9);
  v[4] = 0.5;
  const PhaseField out = step_allen_cahn(PhaseField(p.grid, v), ControlField::zeros(p.grid), p);
  CHECK(out(1, 1) == doctest::Approx(0.475).epsilon(1e-14));
  for (auto [i, j] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) {
    CHECK(out(i, j) == doctest::Approx(0.005).epsilon(1e-12));
  }
  for (auto [i, j] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) CHECK(out(i, j) == 0.0);
}

TEST_CASE("cahn-hilliard 3x3 bump by hand") {
  // mu centre -2.5, mu edge 0.5, mu corner 0.
  // centre 0.5 - 0.01 * 12 = 0.38; edge 0 - 0.01 * (-4) = 0.04; corner -0.01.
  const ModelParams p = raw_params(Pde::cahn_hilliard, 3, 1.0, 0.01);
  Vector v = Vector::Zero(9);
  v[4] = 0.5;
  const PhaseField out = step_cahn_hilliard(PhaseField(p.grid, v), ControlField::zeros(p.grid), p);
  CHECK(out(1, 1) == doctest::Approx(0.38).epsilon(1e-13));
  for (auto [i, j] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) {
    CHECK(out(i, j) == doctest::Approx(0.04).epsilon(1e-12));
  }
  for (auto [i, j] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) {
    CHECK(out(i, j) == doctest::Approx(-0.01).epsilon(1e-12));
  }
  CHECK(out.sum() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cahn-hilliard uniform state with uniform control is unchanged") {
  ModelParams p = raw_params(Pde::cahn_hilliard, 4, 0.01, 0.0);
  p = p.resolved();
  const PhaseField s = PhaseField::constant(p.grid, 0.3);
  const PhaseField out = step(s, ControlField::uniform(p.grid, 1.5, -2.0), p);
  CHECK((out.values().array() == 0.3).all());
}

TEST_CASE("cahn-hilliard conserves mass under random controls") {
  ModelParams p = raw_params(Pde::cahn_hilliard, 8, 0.01, 0.0);
  p = p.resolved();
  Vector phi = random_vector(64, 5, 0.5);
  const double start = phi.sum();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int s = 0; s < 200; ++s) {
    Vector u(128);
    for (int k = 0; k < 128; ++k) u[k] = d(rng);
    phi = step_flat(phi, u, p);
  }
  CHECK(std::abs(phi.sum() - start) < 1e-12 * 64);
}

TEST_CASE("allen-cahn odd symmetry with zero h") {
  const ModelParams p = testing::ac_params(5);
  const Vector phi = random_vector(25, 6);
  Vector u = Vector::Zero(50);
  const Vector t = random_vector(25, 7, 5.0);
  for (int k = 0; k < 25; ++k) u[2 * k] = t[k];
  CHECK((step_flat(-phi, u, p) + step_flat(phi, u, p)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("translation equivariance on the torus") {
  for (Pde pde : {Pde::allen_cahn, Pde::cahn_hilliard}) {
    ModelParams p = raw_params(pde, 6, 0.05, 0.0);
    p = p.resolved();
    const Vector phi = random_vector(36, 8);
    const Vector u = random_vector(72, 9, 5.0);
    const Vector a = step_flat(shift(phi, 6, 2, -1), shift(u, 6, 2, -1, 2), p);
    const Vector b = shift(step_flat(phi, u, p), 6, 2, -1);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("affine split reproduces the stepper") {
  for (Pde pde : {Pde::allen_cahn, Pde::cahn_hilliard}) {
    ModelParams p = raw_params(pde, 5, 0.01, 0.0);
    p = p.resolved();
    const PhaseField s(p.grid, random_vector(25, 10));
    const AffineSplit sp = split_affine(s, p);
    CHECK((sp.drift - step_flat(s.values(), Vector::Zero(50), p)).cwiseAbs().maxCoeff() == 0.0);
    const Vector u = random_vector(50, 11, 5.0);
    const Vector direct = step_flat(s.values(), u, p);
    CHECK((direct - (sp.drift + sp.gain * u)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("allen-cahn gain rows") {
  const ModelParams p = testing::ac_params(4);
  const AffineSplit sp = split_affine(PhaseField::constant(p.grid, 1.0), p);
  const double mdt = p.mobility * p.dt;
  for (int k = 0; k < 16; ++k) {
    CHECK(sp.gain(k, 2 * k) == doctest::Approx(-2 * mdt));
    CHECK(sp.gain(k, 2 * k + 1) == doctest::Approx(-mdt));
    CHECK(sp.gain.row(k).cwiseAbs().sum() == doctest::Approx(3 * mdt));
  }
}

TEST_CASE("analytic jacobians at the zero state are pure diffusion") {
  const ModelParams p = testing::ac_params(4, 0.3);
  const Jacobians J = analytic_jacobians(Vector::Zero(16), Vector::Zero(32), p);
  const double mdt = p.mobility * p.dt;
  Matrix expected = Matrix::Identity(16, 16) + mdt * p.gamma * laplacian_matrix(p.grid);
  CHECK((J.A - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(J.A(0, 0) == doctest::Approx(1 - mdt * 4 * p.gamma));
  CHECK(J.A(0, 1) == doctest::Approx(mdt * p.gamma));
}

TEST_CASE("analytic jacobians match finite differences") {
  for (Pde pde : {Pde::allen_cahn, Pde::cahn_hilliard}) {
    ModelParams p = raw_params(pde, 4, 0.02, 0.0);
    p = p.resolved();
    const Vector x = random_vector(16, 12);
    const Vector u = random_vector(32, 13, 5.0);
    const Jacobians J = analytic_jacobians(x, u, p);
    const Jacobians F = fd_jacobians(x, u, p, 1e-6);
    const double scale_a = J.A.cwiseAbs().maxCoeff();
    const double scale_b = J.B.cwiseAbs().maxCoeff();
    CHECK((J.A - F.A).cwiseAbs().maxCoeff() < 1e-6 * scale_a);
    CHECK((J.B - F.B).cwiseAbs().maxCoeff() < 1e-6 * scale_b);
  }
}

TEST_CASE("stability guard") {
  ModelParams p;
  p.grid.n = 10;
  const double lim = stability_dt_limit(p);
  // Allen-Cahn: M dt (4 gamma / dx^2 + 12 * 4 + 2 * 5) <= 1.
  CHECK(lim == doctest::Approx(1.0 / (0.04 + 58.0)));
  CHECK(p.resolved().dt == doctest::Approx(0.8 * lim));
  p.dt = 1.01 * lim;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.dt = 0.99 * lim;
  CHECK_NOTHROW(p.validate());

  ModelParams ch;
  ch.pde = Pde::cahn_hilliard;
  ch.dt = 0.01;
  CHECK_THROWS_AS(ch.validate(), ConfigError);
  ch.dt = 0.0;
  CHECK(ch.resolved().dt > 0.0);
  CHECK(stability_guard(ch.resolved()) == doctest::Approx(0.8));
}

TEST_CASE("invalid parameters are configuration errors") {
  ModelParams p;
  p.mobility = -1.0;
  CHECK_THROWS_AS(p.resolved(), ConfigError);
  ModelParams q;
  q.gamma = -0.1;
  CHECK_THROWS_AS(q.resolved(), ConfigError);
  CHECK_THROWS_AS(parse_pde("heat"), ConfigError);
  CHECK(parse_pde("ch") == Pde::cahn_hilliard);
}

TEST_CASE("blowup names the first offending cell") {
  const ModelParams p = raw_params(Pde::allen_cahn, 3, 0.01, 0.01);
  Vector phi = Vector::Zero(9);
  phi[5] = 1e120;
  try {
    step_flat(phi, Vector::Zero(18), p);
    FAIL("expected blowup");
  } catch (const BlowupError& e) {
    CHECK(e.row() == 1);
    CHECK(e.col() == 2);
  }
}

TEST_CASE("clipping and bounds") {
  const ModelParams p = testing::ac_params(2);
  Vector u(8);
  u << 9, -9, -7, 1, 0, 0, 4.9, 5.1;
  const Vector c = clip_controls(u, p.bounds);
  CHECK(c[0] == 5);
  CHECK(c[1] == -5);
  CHECK(c[2] == -5);
  CHECK(c[7] == 5);
  const Plant plant = make_plant(p);
  CHECK(plant.clip(u) == c);
}

TEST_CASE("heun step is the trapezoid average and refuses analytic jacobians") {
  ModelParams p = testing::ac_params(4);
  p.integrator = Integrator::heun;
  const Vector x = random_vector(16, 14);
  const Vector u = random_vector(32, 15, 2.0);
  ModelParams e = p;
  e.integrator = Integrator::euler;
  const Vector expected = 0.5 * (x + step_flat(step_flat(x, u, e), u, e));
  CHECK((step_flat(x, u, p) - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(analytic_jacobians(x, u, p), ConfigError);
  CHECK_FALSE(static_cast<bool>(make_plant(p).jacobians));
}
