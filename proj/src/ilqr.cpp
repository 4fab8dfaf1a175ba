#include "phasectl/ilqr.hpp"

#include "phasectl/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace phasectl {

void CostParams::validate(int state_dim) const {
  if (goal.size() != state_dim) {
    throw ConfigError("goal has " + std::to_string(goal.size()) + " entries, state has " +
                      std::to_string(state_dim));
  }
  if (!(q_run >= 0.0) || !(q_term >= 0.0)) throw ConfigError("state weights must be >= 0");
  if (!(r_ctrl > 0.0)) throw ConfigError("control weight r_ctrl must be positive");
}

double CostParams::running(const Vector& x, const Vector& u) const {
  return 0.5 * q_run * (x - goal).squaredNorm() + 0.5 * r_ctrl * u.squaredNorm();
}

double CostParams::terminal(const Vector& x) const {
  return 0.5 * q_term * (x - goal).squaredNorm();
}

Trajectory rollout(const Plant& plant, const Vector& initial, const std::vector<Vector>& controls,
                   const CostParams& cost) {
  Trajectory traj;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(initial);
  traj.controls = controls;
  traj.per_step_costs.reserve(controls.size());
  for (std::size_t t = 0; t < controls.size(); ++t) {
    const int ti = static_cast<int>(t);
    try {
      traj.states.push_back(plant.step(ti, traj.states[t], controls[t]));
    } catch (const BlowupError& e) {
      throw BlowupError(std::string(e.what()) + " at timestep " + std::to_string(t), e.row(),
                        e.col(), ti);
    }
    traj.per_step_costs.push_back(cost.running(traj.states[t], controls[t]));
  }
  traj.terminal_cost = cost.terminal(traj.states.back());
  traj.total_cost = traj.terminal_cost;
  for (double c : traj.per_step_costs) traj.total_cost += c;
  return traj;
}

Trajectory rollout(const PhaseField& initial, const std::vector<Vector>& controls,
                   const ModelParams& params, const CostParams& cost) {
  const Plant plant = make_plant(params);
  for (const Vector& u : controls) {
    if (u.size() != plant.control_dim) throw ConfigError("control has the wrong size");
    if ((u.array() < plant.u_min.array() - 1e-12).any() ||
        (u.array() > plant.u_max.array() + 1e-12).any()) {
      throw ConfigError("control sequence exceeds the control bounds");
    }
  }
  return rollout(plant, initial.values(), controls, cost);
}

double recompute_cost(const Trajectory& traj, const CostParams& cost) {
  double total = cost.terminal(traj.states.back());
  for (int t = 0; t < traj.horizon(); ++t) total += cost.running(traj.states[t], traj.controls[t]);
  return total;
}

double terminal_mse(const Trajectory& traj, const Vector& goal) {
  return (traj.states.back() - goal).squaredNorm() / static_cast<double>(goal.size());
}

namespace {

double projected_decrease(const Plant& plant, const Trajectory& traj, const BackwardPassResult& bp) {
  double dv = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const Vector& u = traj.controls[t];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double k = bp.k[t][i];
      if ((k > 0.0 && u[i] >= plant.u_max[i]) || (k < 0.0 && u[i] <= plant.u_min[i])) continue;
      dv += k * bp.qu[t][i];
    }
  }
  return dv;
}

}  // namespace

BackwardPassResult backward_pass(const Trajectory& traj, const LTVModel& lin,
                                 const CostParams& cost, double mu) {
  const int T = traj.horizon();
  if (lin.horizon() != T) throw ConfigError("linearization length does not match the horizon");
  BackwardPassResult out;
  out.k.resize(T);
  out.K.resize(T);
  out.qu.resize(T);
  if (T == 0) {
    out.success = true;
    return out;
  }
  const int nx = static_cast<int>(traj.states.front().size());

  Vector vx = cost.q_term * (traj.states[T] - cost.goal);
  Matrix vxx = cost.q_term * Matrix::Identity(nx, nx);

  for (int t = T - 1; t >= 0; --t) {
    const Matrix& A = lin.A[t];
    const Matrix& B = lin.B[t];
    const Matrix vxx_a = vxx * A;
    const Matrix vxx_b = vxx * B;

    const Vector qx = cost.q_run * (traj.states[t] - cost.goal) + A.transpose() * vx;
    const Vector qu = cost.r_ctrl * traj.controls[t] + B.transpose() * vx;
    Matrix qxx = A.transpose() * vxx_a;
    qxx.diagonal().array() += cost.q_run;
    Matrix quu = B.transpose() * vxx_b;
    quu.diagonal().array() += cost.r_ctrl;
    const Matrix qux = B.transpose() * vxx_a;

    Matrix quu_reg = quu;
    quu_reg.diagonal().array() += mu;
    Eigen::LLT<Matrix> llt(quu_reg);
    if (llt.info() != Eigen::Success) {
      out.success = false;
      out.failed_step = t;
      return out;
    }
    Vector k = -llt.solve(qu);
    Matrix K = -llt.solve(qux);

    out.dv_linear += k.dot(qu);
    out.dv_quadratic += 0.5 * k.dot(quu * k);

    const Matrix kt_quu = K.transpose() * quu;
    vx = qx + kt_quu * k + K.transpose() * qu + qux.transpose() * k;
    vxx = qxx + kt_quu * K + K.transpose() * qux + qux.transpose() * K;
    vxx = 0.5 * (vxx + vxx.transpose()).eval();

    out.k[t] = std::move(k);
    out.K[t] = std::move(K);
    out.qu[t] = qu;
  }
  out.success = true;
  return out;
}

ForwardPassResult forward_pass(const Plant& plant, const Trajectory& nominal,
                               const BackwardPassResult& gains, double alpha,
                               const CostParams& cost) {
  const int T = nominal.horizon();
  ForwardPassResult out;
  Trajectory& traj = out.trajectory;
  traj.states.reserve(T + 1);
  traj.controls.reserve(T);
  traj.per_step_costs.reserve(T);
  traj.states.push_back(nominal.states.front());
  try {
    for (int t = 0; t < T; ++t) {
      const Vector dx = traj.states[t] - nominal.states[t];
      Vector u = nominal.controls[t] + alpha * gains.k[t] + gains.K[t] * dx;
      u = plant.clip(u);
      traj.per_step_costs.push_back(cost.running(traj.states[t], u));
      traj.states.push_back(plant.step(t, traj.states[t], u));
      traj.controls.push_back(std::move(u));
    }
  } catch (const BlowupError&) {
    out.trajectory = nominal;
    out.accepted = false;
    return out;
  }
  traj.terminal_cost = cost.terminal(traj.states.back());
  traj.total_cost = traj.terminal_cost;
  for (double c : traj.per_step_costs) traj.total_cost += c;
  out.accepted = std::isfinite(traj.total_cost) && traj.total_cost < nominal.total_cost;
  return out;
}

JacobianSource parse_jacobian_source(const std::string& name) {
  if (name == "lls-cd") return JacobianSource::lls_cd;
  if (name == "analytic") return JacobianSource::analytic;
  throw ConfigError("unknown jacobian source '" + name + "' (lls-cd, analytic)");
}

std::string to_string(JacobianSource source) {
  return source == JacobianSource::lls_cd ? "lls-cd" : "analytic";
}

std::vector<double> default_alpha_schedule() {
  std::vector<double> alphas;
  for (int i = 0; i <= 10; ++i) alphas.push_back(std::ldexp(1.0, -i));
  return alphas;
}

void ILQROptions::validate() const {
  if (horizon < 1) throw ConfigError("ilqr horizon must be >= 1");
  if (max_iters < 1) throw ConfigError("ilqr max_iters must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("ilqr eps must be positive");
  if (!(mu_init >= 0.0) || !(mu_min >= 0.0)) throw ConfigError("ilqr mu must be >= 0");
  if (!(mu_factor > 1.0)) throw ConfigError("ilqr mu_factor must be > 1");
  if (alpha_schedule.empty() || alpha_schedule.front() != 1.0) {
    throw ConfigError("alpha schedule must start at 1.0");
  }
  for (std::size_t i = 0; i < alpha_schedule.size(); ++i) {
    const double a = alpha_schedule[i];
    if (!(a > 0.0 && a <= 1.0) || (i > 0 && !(a < alpha_schedule[i - 1]))) {
      throw ConfigError("alpha schedule must be strictly decreasing within (0, 1]");
    }
  }
}

LTVModel linearize(const Plant& plant, const Trajectory& traj, JacobianSource source,
                   const LlsCdConfig& cfg, std::uint64_t seed, int threads) {
  const int T = traj.horizon();
  LTVModel model;
  model.A.resize(T);
  model.B.resize(T);
  if (T == 0) return model;

  if (source == JacobianSource::analytic) {
    if (!plant.jacobians) throw ConfigError("plant has no analytic Jacobians");
    parallel_for(T, threads, [&](int t) {
      Jacobians J = plant.jacobians(t, traj.states[t], traj.controls[t]);
      model.A[t] = std::move(J.A);
      model.B[t] = std::move(J.B);
    });
    return model;
  }

  LlsCdConfig c = cfg;
  c.seed = seed;
  c.threads = 1;
  const LlsCdEstimator estimator(plant.state_dim, plant.control_dim, c);
  parallel_for(T, threads, [&](int t) {
    auto step = [&](const Vector& x, const Vector& u) { return plant.step(t, x, u); };
    Jacobians J = estimator.estimate(traj.states[t], traj.controls[t], step);
    model.A[t] = std::move(J.A);
    model.B[t] = std::move(J.B);
  });
  return model;
}

OpenLoopResult optimize_open_loop(const Plant& plant, const Vector& initial, const CostParams& cost,
                                  const ILQROptions& opts, std::vector<Vector> initial_controls) {
  opts.validate();
  cost.validate(plant.state_dim);
  if (initial.size() != plant.state_dim) throw ConfigError("initial state has the wrong size");
  if (initial_controls.empty()) {
    initial_controls.assign(opts.horizon, Vector::Zero(plant.control_dim));
  }
  if (static_cast<int>(initial_controls.size()) != opts.horizon) {
    throw ConfigError("initial control guess length does not match the horizon");
  }
  for (Vector& u : initial_controls) u = plant.clip(u);

  OpenLoopResult result;
  result.trajectory = rollout(plant, initial, initial_controls, cost);
  double mu = opts.mu_init;
  result.history.push_back({0, result.trajectory.total_cost, mu, 0.0, true});

  LTVModel lin;
  bool lin_valid = false;
  bool accepted_any = false;
  int rejected_in_row = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Trajectory& traj = result.trajectory;
    if (!lin_valid) {
      lin = linearize(plant, traj, opts.jacobians, opts.lls_cd,
                      derive_seed(opts.lls_cd.seed, static_cast<std::uint64_t>(it)), opts.threads);
      lin_valid = true;
    }
    const BackwardPassResult bp = backward_pass(traj, lin, cost, mu);
    if (!bp.success) {
      mu = std::max(mu * opts.mu_factor, opts.mu_min);
      result.history.push_back({it, traj.total_cost, mu, 0.0, false});
      if (mu > opts.mu_max) break;
      continue;
    }
    // Nothing left to gain to first order: already stationary.
    if (-bp.dv_linear <= 1e-14 * std::max(traj.total_cost, 1e-300) || -bp.dv_linear < 1e-300) {
      result.converged = true;
      break;
    }
    // Same test once channels pinned at a bound and pushed outward are dropped.
    if (plant.bounded() &&
        -projected_decrease(plant, traj, bp) <= opts.eps * std::max(traj.total_cost, 1e-300)) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    double alpha_used = 0.0;
    for (double alpha : opts.alpha_schedule) {
      ForwardPassResult fp = forward_pass(plant, traj, bp, alpha, cost);
      if (fp.accepted) {
        const double old_cost = traj.total_cost;
        traj = std::move(fp.trajectory);
        accepted = true;
        alpha_used = alpha;
        const double rel = (old_cost - traj.total_cost) / old_cost;
        mu = std::max(mu / 2.0, opts.mu_min);
        result.history.push_back({it, traj.total_cost, mu, alpha_used, true});
        if (rel < opts.eps) result.converged = true;
        break;
      }
    }
    if (accepted) {
      accepted_any = true;
      rejected_in_row = 0;
      lin_valid = false;
      if (result.converged) break;
      continue;
    }
    mu = std::max(mu * opts.mu_factor, opts.mu_min);
    result.history.push_back({it, traj.total_cost, mu, 0.0, false});
    if (mu > opts.mu_max || ++rejected_in_row >= opts.max_rejected) break;
  }

  if (!accepted_any && !result.converged) {
    throw StalledError("ilqr stalled: no forward pass was accepted in " +
                           std::to_string(result.history.size() - 1) + " iterations",
                       result.history);
  }
  if (!result.converged && accepted_any) {
    // Line search exhausted after progress was made: a local optimum under the bounds.
    result.converged = result.history.back().accepted == false;
  }
  return result;
}

}  // namespace phasectl
