#pragma once

#include <Eigen/Dense>

#include <vector>

namespace phasectl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One-step linearization x' ~ A x + B u.
struct Jacobians {
  Matrix A;
  Matrix B;
};

// Per-timestep perturbation model dx_{t+1} = A_t dx_t + B_t du_t.
struct LTVModel {
  std::vector<Matrix> A;
  std::vector<Matrix> B;

  int horizon() const { return static_cast<int>(A.size()); }
  int state_dim() const { return A.empty() ? 0 : static_cast<int>(A.front().rows()); }
  int control_dim() const { return B.empty() ? 0 : static_cast<int>(B.front().cols()); }
};

}  // namespace phasectl
