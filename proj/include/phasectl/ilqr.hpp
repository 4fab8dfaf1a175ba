#pragma once

#include "phasectl/dynamics.hpp"
#include "phasectl/errors.hpp"
#include "phasectl/jacobian.hpp"
#include "phasectl/plant.hpp"
#include "phasectl/types.hpp"

#include <string>
#include <vector>

namespace phasectl {

// c(x, u) = q_run/2 |x - goal|^2 + r_ctrl/2 |u|^2 per step, terminal q_term/2 |x_T - goal|^2.
struct CostParams {
  Vector goal;
  double q_run = 1.0;
  double r_ctrl = 1e-3;
  double q_term = 100.0;

  void validate(int state_dim) const;
  double running(const Vector& x, const Vector& u) const;
  double terminal(const Vector& x) const;
};

struct Trajectory {
  std::vector<Vector> states;    // x_0 .. x_T
  std::vector<Vector> controls;  // u_0 .. u_{T-1}, as applied
  std::vector<double> per_step_costs;
  double terminal_cost = 0.0;
  double total_cost = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
};

// Forward simulation with cost bookkeeping. Controls are used as given (no clipping).
// A stepper blowup is rethrown with the failing timestep attached.
Trajectory rollout(const Plant& plant, const Vector& initial, const std::vector<Vector>& controls,
                   const CostParams& cost);
Trajectory rollout(const PhaseField& initial, const std::vector<Vector>& controls,
                   const ModelParams& params, const CostParams& cost);

// Sum of per-step and terminal costs evaluated from the stored states and controls.
double recompute_cost(const Trajectory& traj, const CostParams& cost);

double terminal_mse(const Trajectory& traj, const Vector& goal);

struct BackwardPassResult {
  std::vector<Vector> k;  // feedforward
  std::vector<Matrix> K;  // feedback
  std::vector<Vector> qu;  // control gradient of Q per step
  bool success = false;
  int failed_step = -1;
  // Predicted change for step alpha: alpha * dv_linear + alpha^2 * dv_quadratic.
  double dv_linear = 0.0;
  double dv_quadratic = 0.0;
};

// First-order iLQR recursion on a quadratic cost; Q_uu is regularized as Q_uu + mu I.
BackwardPassResult backward_pass(const Trajectory& traj, const LTVModel& linearization,
                                 const CostParams& cost, double mu);

struct ForwardPassResult {
  Trajectory trajectory;
  bool accepted = false;
};

// u_t = ubar_t + alpha k_t + K_t (x_t - xbar_t), clipped to the plant bounds.
// Accepted iff the new cost is strictly lower; a blowup counts as rejected.
ForwardPassResult forward_pass(const Plant& plant, const Trajectory& nominal,
                               const BackwardPassResult& gains, double alpha,
                               const CostParams& cost);

enum class JacobianSource { lls_cd, analytic };

JacobianSource parse_jacobian_source(const std::string& name);
std::string to_string(JacobianSource source);

std::vector<double> default_alpha_schedule();

struct ILQROptions {
  int horizon = 10;
  int max_iters = 100;
  double eps = 1e-3;
  double mu_init = 1e-6;
  double mu_factor = 10.0;
  double mu_min = 1e-9;
  double mu_max = 1e10;
  int max_rejected = 5;  // consecutive fully rejected line searches before giving up
  std::vector<double> alpha_schedule = default_alpha_schedule();
  JacobianSource jacobians = JacobianSource::lls_cd;
  LlsCdConfig lls_cd;
  int threads = 1;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double mu = 0.0;
  double alpha = 0.0;  // 0 when no step was taken
  bool accepted = false;
};

struct OpenLoopResult {
  Trajectory trajectory;
  std::vector<IterationRecord> history;
  bool converged = false;
};

class StalledError : public NumericalError {
 public:
  StalledError(const std::string& what, std::vector<IterationRecord> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

// Jacobians along a trajectory, one pair per step. For LLS-CD, `seed` selects the draws.
LTVModel linearize(const Plant& plant, const Trajectory& traj, JacobianSource source,
                   const LlsCdConfig& cfg, std::uint64_t seed, int threads);

// Iterates backward/forward passes until the relative cost decrease drops below eps.
// `initial_controls` defaults to all zeros; it is clipped to the plant bounds.
OpenLoopResult optimize_open_loop(const Plant& plant, const Vector& initial, const CostParams& cost,
                                  const ILQROptions& opts,
                                  std::vector<Vector> initial_controls = {});

}  // namespace phasectl
