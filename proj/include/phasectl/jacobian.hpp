#pragma once

#include "phasectl/types.hpp"

#include <cstdint>
#include <functional>

namespace phasectl {

using OneStepFn = std::function<Vector(const Vector& x, const Vector& u)>;

// Linear least squares by central difference.
struct LlsCdConfig {
  double sigma = 1e-4;
  int n_samples = 0;  // 0 selects 2 * (n_x + n_u)
  std::uint64_t seed = 1;
  bool diagonal_gram = false;  // fast path: replace the Gram matrix by sigma^2 (n_s - 1) I
  int threads = 1;

  int resolved_samples(int dim) const { return n_samples > 0 ? n_samples : 2 * dim; }
};

// dim x n_samples matrix of iid N(0, sigma^2) draws, filled column by column.
Matrix draw_perturbations(int dim, int n_samples, double sigma, std::uint64_t seed);

// Holds one set of perturbations and the factorized Gram matrix so several nominal
// points (e.g. every step of a horizon) can be linearized against the same draws.
class LlsCdEstimator {
 public:
  LlsCdEstimator(int state_dim, int control_dim, const LlsCdConfig& cfg);

  // Evaluates step at nominal +/- each perturbation (2 n_s calls) and solves
  // [A B] = 1/2 H dY^T (dY dY^T)^-1.
  Jacobians estimate(const Vector& x, const Vector& u, const OneStepFn& step) const;

  const Matrix& perturbations() const { return dy_; }
  int samples() const { return static_cast<int>(dy_.cols()); }

 private:
  int nx_;
  int nu_;
  LlsCdConfig cfg_;
  Matrix dy_;
  Eigen::LLT<Matrix> gram_;
};

Jacobians estimate_jacobians(const Vector& x, const Vector& u, const OneStepFn& step,
                             const LlsCdConfig& cfg);

}  // namespace phasectl
