#pragma once

#include "phasectl/ilqr.hpp"
#include "phasectl/types.hpp"

#include <vector>

namespace phasectl {

struct RiccatiOptions {
  // Dense recursion is refused above this many states.
  int max_state_dim = 1024;
};

struct RiccatiResult {
  // Already negated: the applied control is ubar_t + gains[t] * dx_t.
  std::vector<Matrix> gains;
  std::vector<Matrix> cost_to_go;  // P_0 .. P_T
  // Largest relative asymmetry of any P_t before it was symmetrized.
  double max_asymmetry = 0.0;
};

// Finite-horizon discrete Riccati recursion with Q = q_run I, R = r_ctrl I, P_T = q_term I:
//   K_t = (R + B^T P B)^-1 B^T P A,   P_t = Q + A^T P (A - B K_t).
RiccatiResult riccati_gains(const LTVModel& model, double q_run, double r_ctrl, double q_term,
                            const RiccatiOptions& opts = {});
RiccatiResult riccati_gains(const LTVModel& model, const CostParams& cost,
                            const RiccatiOptions& opts = {});

}  // namespace phasectl
