#pragma once

#include "phasectl/dynamics.hpp"
#include "phasectl/grid.hpp"
#include "phasectl/plant.hpp"

#include <random>

namespace testing {

using phasectl::Matrix;
using phasectl::Vector;

inline Vector random_vector(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Matrix random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Matrix m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

// x' = A_t x + B_t u, unbounded.
inline phasectl::Plant linear_plant(std::vector<Matrix> A, std::vector<Matrix> B) {
  phasectl::Plant p;
  p.state_dim = static_cast<int>(A.front().rows());
  p.control_dim = static_cast<int>(B.front().cols());
  p.step = [A, B](int t, const Vector& x, const Vector& u) -> Vector {
    const std::size_t k = static_cast<std::size_t>(t) % A.size();
    return A[k] * x + B[k] * u;
  };
  p.jacobians = [A, B](int t, const Vector&, const Vector&) {
    const std::size_t k = static_cast<std::size_t>(t) % A.size();
    return phasectl::Jacobians{A[k], B[k]};
  };
  return p;
}

inline double rel_fro(const Matrix& est, const Matrix& ref) {
  return (est - ref).norm() / ref.norm();
}

inline phasectl::ModelParams ac_params(int n, double gamma = 0.01) {
  phasectl::ModelParams p;
  p.grid.n = n;
  p.gamma = gamma;
  return p.resolved();
}

}  // namespace testing
