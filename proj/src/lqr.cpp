#include "phasectl/lqr.hpp"

#include "phasectl/errors.hpp"

#include <algorithm>

namespace phasectl {

RiccatiResult riccati_gains(const LTVModel& model, double q_run, double r_ctrl, double q_term,
                            const RiccatiOptions& opts) {
  const int T = model.horizon();
  if (T < 1) throw ConfigError("riccati_gains needs a model horizon >= 1");
  if (!(r_ctrl > 0.0)) throw ConfigError("riccati_gains needs r_ctrl > 0");
  if (!(q_run >= 0.0) || !(q_term >= 0.0)) throw ConfigError("state weights must be >= 0");
  const int nx = model.state_dim();
  if (nx > opts.max_state_dim) {
    throw ConfigError("dense Riccati recursion refused: " + std::to_string(nx) +
                      " states exceeds the limit of " + std::to_string(opts.max_state_dim));
  }

  RiccatiResult out;
  out.gains.resize(T);
  out.cost_to_go.resize(T + 1);
  Matrix P = q_term * Matrix::Identity(nx, nx);
  out.cost_to_go[T] = P;
  for (int t = T - 1; t >= 0; --t) {
    const Matrix& A = model.A[t];
    const Matrix& B = model.B[t];
    const Matrix pb = P * B;
    Matrix s = B.transpose() * pb;
    s.diagonal().array() += r_ctrl;
    Eigen::LLT<Matrix> llt(s);
    if (!s.allFinite() || llt.info() != Eigen::Success) {
      throw NumericalError("Riccati solve block is not positive definite at timestep " +
                           std::to_string(t));
    }
    const Matrix K = llt.solve(pb.transpose() * A);
    Matrix next = A.transpose() * (P * A - pb * K);
    next.diagonal().array() += q_run;

    const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
    out.max_asymmetry =
        std::max(out.max_asymmetry, (next - next.transpose()).cwiseAbs().maxCoeff() / scale);
    P = 0.5 * (next + next.transpose());
    out.cost_to_go[t] = P;
    out.gains[t] = -K;
  }
  return out;
}

RiccatiResult riccati_gains(const LTVModel& model, const CostParams& cost,
                            const RiccatiOptions& opts) {
  return riccati_gains(model, cost.q_run, cost.r_ctrl, cost.q_term, opts);
}

}  // namespace phasectl
