#include "doctest.h"
#include "helpers.hpp"

#include "phasectl/errors.hpp"
#include "phasectl/ilqr.hpp"
#include "phasectl/lqr.hpp"
#include "phasectl/sysid.hpp"

using namespace phasectl;
using testing::random_matrix;
using testing::random_vector;

namespace {

LTVModel constant_model(const Matrix& A, const Matrix& B, int T) {
  return {std::vector<Matrix>(T, A), std::vector<Matrix>(T, B)};
}

// Closed-loop quadratic cost of the linear model from dx0 with u = K_t dx.
double lq_cost(const LTVModel& m, const std::vector<Matrix>& K, const Vector& dx0, double q,
               double r, double qt) {
  Vector dx = dx0;
  double J = 0.0;
  for (int t = 0; t < m.horizon(); ++t) {
    const Vector du = K.empty() ? Vector::Zero(m.control_dim()) : Vector(K[t] * dx);
    J += 0.5 * q * dx.squaredNorm() + 0.5 * r * du.squaredNorm();
    dx = m.A[t] * dx + m.B[t] * du;
  }
  return J + 0.5 * qt * dx.squaredNorm();
}

}  // namespace

TEST_CASE("scalar long horizon approaches the DARE gain") {
  // Oracle: iterate P <- q + a^2 P - (a b P)^2 / (r + b^2 P) to a fixed point.
  double P = 1.0;
  for (int i = 0; i < 10000; ++i) P = 1.0 + P - P * P / (1.0 + P);
  const double dare_gain = P / (1.0 + P);
  CHECK(dare_gain == doctest::Approx(0.6180339887498949).epsilon(1e-12));
  const RiccatiResult r =
      riccati_gains(constant_model(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 200), 1, 1, 1);
  CHECK(r.gains[0](0, 0) == doctest::Approx(-dare_gain).epsilon(1e-12));
  CHECK(r.gains[199](0, 0) == doctest::Approx(-0.5));
}

TEST_CASE("nothing to regulate or nothing to actuate gives zero gains") {
  const Matrix A = random_matrix(3, 3, 1000);
  const Matrix B = random_matrix(3, 2, 1001);
  for (const Matrix& K : riccati_gains(constant_model(A, B, 5), 0, 1, 0).gains) CHECK(K.isZero(0.0));
  for (const Matrix& K : riccati_gains(constant_model(A, Matrix::Zero(3, 2), 5), 1, 1, 10).gains) {
    CHECK(K.isZero(0.0));
  }
}

TEST_CASE("cost-to-go stays symmetric positive semidefinite") {
  LTVModel m;
  for (int t = 0; t < 8; ++t) {
    m.A.push_back(random_matrix(5, 5, 1100 + t));
    m.B.push_back(random_matrix(5, 3, 1200 + t));
  }
  const RiccatiResult r = riccati_gains(m, 1.0, 0.1, 10.0);
  CHECK(r.max_asymmetry < 1e-10);
  for (const Matrix& P : r.cost_to_go) {
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("gains are invariant to a common weight scale") {
  const LTVModel m = constant_model(random_matrix(4, 4, 1300), random_matrix(4, 2, 1301), 6);
  const RiccatiResult a = riccati_gains(m, 1.0, 0.01, 50.0);
  const RiccatiResult b = riccati_gains(m, 7.5, 0.075, 375.0);
  for (int t = 0; t < 6; ++t) {
    CHECK((a.gains[t] - b.gains[t]).norm() <= 1e-10 * a.gains[t].norm());
  }
}

TEST_CASE("feedback beats no feedback on the identified model") {
  const ModelParams p = testing::ac_params(4);
  const Plant plant = make_plant(p);
  CostParams c;
  c.goal = make_goal(p.grid, GoalKind::banded, 2).field.values();
  ILQROptions o;
  o.horizon = 6;
  const OpenLoopResult ol = optimize_open_loop(plant, Vector::Zero(16), c, o);
  const LTVModel m = identify_ltv(ol.trajectory, plant, SysIdConfig{});
  const RiccatiResult r = riccati_gains(m, c);
  std::mt19937_64 rng(1400);
  std::normal_distribution<double> n(0.0, 0.05);
  int wins = 0;
  for (int i = 0; i < 100; ++i) {
    Vector dx0(16);
    for (auto& v : dx0) v = n(rng);
    const double with = lq_cost(m, r.gains, dx0, c.q_run, c.r_ctrl, c.q_term);
    const double without = lq_cost(m, {}, dx0, c.q_run, c.r_ctrl, c.q_term);
    wins += with < without;
  }
  CHECK(wins == 100);
}

TEST_CASE("riccati errors") {
  CHECK_THROWS_AS(riccati_gains(LTVModel{}, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(riccati_gains(constant_model(Matrix::Identity(3, 3), Matrix::Ones(3, 1), 2), 1, 1,
                                1, RiccatiOptions{2}),
                  ConfigError);
  Matrix B = Matrix::Ones(2, 1);
  B(1, 0) = std::numeric_limits<double>::quiet_NaN();
  LTVModel m = constant_model(Matrix::Identity(2, 2), Matrix::Ones(2, 1), 4);
  m.B[2] = B;
  try {
    riccati_gains(m, 1, 1, 1);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("timestep 2") != std::string::npos);
  }
}
