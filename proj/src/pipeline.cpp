#include "phasectl/pipeline.hpp"

#include "binio.hpp"
#include "fileio.hpp"
#include "phasectl/harness.hpp"
#include "phasectl/parallel.hpp"

#include <cmath>
#include <random>

namespace phasectl {

namespace {
constexpr std::string_view kPolicyMagic = "PPOL";
constexpr std::uint8_t kPolicyVersion = 1;
}  // namespace

long long open_loop_parameter_count(const GridSpec& grid, int horizon) {
  return static_cast<long long>(horizon) * grid.control_dim();
}

long long DesignSettings::open_loop_parameter_count() const {
  return phasectl::open_loop_parameter_count(model.grid, ilqr.horizon);
}

long long FeedbackPolicy::open_loop_parameter_count() const {
  long long count = 0;
  for (const Vector& u : nominal.controls) count += u.size();
  return count;
}

double FeedbackPolicy::max_nominal_control() const {
  double m = 0.0;
  for (const Vector& u : nominal.controls) {
    if (u.size() > 0) m = std::max(m, u.cwiseAbs().maxCoeff());
  }
  return m;
}

D2CDesign d2c_design(const DesignSettings& settings) {
  const ModelParams params = settings.model.resolved();
  if (!(settings.initial.spec() == params.grid)) {
    throw ConfigError("initial field grid does not match the model grid");
  }
  const Plant plant = make_plant(params);

  D2CDesign design;
  design.open_loop =
      optimize_open_loop(plant, settings.initial.values(), settings.cost, settings.ilqr);
  const Trajectory& nominal = design.open_loop.trajectory;
  design.model = identify_ltv(nominal, plant, settings.sysid);
  RiccatiResult lqr = riccati_gains(design.model, settings.cost, settings.lqr);
  design.max_riccati_asymmetry = lqr.max_asymmetry;
  design.policy.nominal = nominal;
  design.policy.gains = std::move(lqr.gains);
  return design;
}

void save_design(const D2CDesign& design, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_policy(design.policy, dir / "policy.ppol");
  save_ltv(design.model, dir / "ltv.ltvm");
  fileio::dump(dir / "convergence.csv", encode_convergence_csv(design.open_loop.history));
}

std::string encode_policy(const FeedbackPolicy& policy) {
  const Trajectory& nom = policy.nominal;
  const int T = nom.horizon();
  const int nx = static_cast<int>(nom.states.front().size());
  const int nu = T > 0 ? static_cast<int>(nom.controls.front().size()) : 0;
  std::string out(kPolicyMagic);
  out.push_back(static_cast<char>(kPolicyVersion));
  binio::put_u32(out, static_cast<std::uint32_t>(T));
  binio::put_u32(out, static_cast<std::uint32_t>(nx));
  binio::put_u32(out, static_cast<std::uint32_t>(nu));
  binio::put_f64(out, nom.total_cost);
  for (const Vector& x : nom.states)
    for (int i = 0; i < nx; ++i) binio::put_f64(out, x[i]);
  for (const Vector& u : nom.controls)
    for (int i = 0; i < nu; ++i) binio::put_f64(out, u[i]);
  for (const Matrix& K : policy.gains)
    for (int r = 0; r < nu; ++r)
      for (int c = 0; c < nx; ++c) binio::put_f64(out, K(r, c));
  return out;
}

FeedbackPolicy decode_policy(const std::string& bytes) {
  binio::Reader rd(bytes, "policy");
  rd.expect_magic(kPolicyMagic, kPolicyVersion);
  const auto T = rd.u32("horizon");
  const auto nx = rd.u32("state dimension");
  const auto nu = rd.u32("control dimension");
  const double cost = rd.f64("nominal cost");
  const std::size_t expected =
      8 * (static_cast<std::size_t>(T + 1) * nx + static_cast<std::size_t>(T) * nu +
           static_cast<std::size_t>(T) * nu * nx);
  if (bytes.size() - rd.pos() != expected) {
    rd.fail("payload is " + std::to_string(bytes.size() - rd.pos()) + " bytes, header implies " +
            std::to_string(expected));
  }
  FeedbackPolicy policy;
  Trajectory& nom = policy.nominal;
  for (std::uint32_t t = 0; t <= T; ++t) {
    Vector x(nx);
    for (std::uint32_t i = 0; i < nx; ++i) x[i] = rd.f64("state");
    nom.states.push_back(std::move(x));
  }
  for (std::uint32_t t = 0; t < T; ++t) {
    Vector u(nu);
    for (std::uint32_t i = 0; i < nu; ++i) u[i] = rd.f64("control");
    nom.controls.push_back(std::move(u));
  }
  for (std::uint32_t t = 0; t < T; ++t) {
    Matrix K(nu, nx);
    for (std::uint32_t r = 0; r < nu; ++r)
      for (std::uint32_t c = 0; c < nx; ++c) K(r, c) = rd.f64("gain");
    policy.gains.push_back(std::move(K));
  }
  rd.expect_end();
  nom.total_cost = cost;
  return policy;
}

void save_policy(const FeedbackPolicy& policy, const std::filesystem::path& path) {
  fileio::dump(path, encode_policy(policy));
}

FeedbackPolicy load_policy(const std::filesystem::path& path) {
  return decode_policy(fileio::slurp(path));
}

namespace {

class NoiseSource {
 public:
  NoiseSource(const NoiseSpec& spec, double scale)
      : std_(spec.level * scale), rng_(spec.seed) {
    if (!(spec.level >= 0.0)) throw ConfigError("noise level must be >= 0");
  }

  // Adds one step of channel noise to u; a no-op (and no draws) at zero level.
  Vector perturb(const Vector& u) {
    if (std_ == 0.0) return u;
    Vector out = u;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += std_ * normal_(rng_);
    return out;
  }

 private:
  double std_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

void finish(RolloutResult& r, const CostParams& cost) {
  Trajectory& traj = r.trajectory;
  traj.terminal_cost = cost.terminal(traj.states.back());
  traj.total_cost = traj.terminal_cost;
  for (double c : traj.per_step_costs) traj.total_cost += c;
  r.episodic_cost = traj.total_cost;
  r.terminal_mse = terminal_mse(traj, cost.goal);
}

// One closed-loop step: record cost, apply, propagate. Blowups carry the timestep.
void advance(Trajectory& traj, const Plant& plant, const CostParams& cost, int t,
             const Vector& applied) {
  traj.per_step_costs.push_back(cost.running(traj.states.back(), applied));
  try {
    traj.states.push_back(plant.step(t, traj.states.back(), applied));
  } catch (const BlowupError& e) {
    throw BlowupError(std::string(e.what()) + " at timestep " + std::to_string(t), e.row(),
                      e.col(), t);
  }
  traj.controls.push_back(applied);
}

RolloutResult policy_rollout(const FeedbackPolicy& policy, const Plant& plant,
                             const CostParams& cost, const NoiseSpec& noise, bool feedback) {
  const Trajectory& nom = policy.nominal;
  const int T = nom.horizon();
  if (feedback && static_cast<int>(policy.gains.size()) != T) {
    throw ConfigError("policy has " + std::to_string(policy.gains.size()) + " gains for horizon " +
                      std::to_string(T));
  }
  if (nom.states.front().size() != plant.state_dim) {
    throw ConfigError("policy state dimension does not match the model");
  }
  NoiseSource source(noise, policy.max_nominal_control());
  RolloutResult r;
  r.trajectory.states.push_back(nom.states.front());
  for (int t = 0; t < T; ++t) {
    Vector u = nom.controls[t];
    if (feedback) u += policy.gains[t] * (r.trajectory.states.back() - nom.states[t]);
    advance(r.trajectory, plant, cost, t, source.perturb(plant.clip(u)));
  }
  finish(r, cost);
  return r;
}

}  // namespace

RolloutResult closed_loop_rollout(const FeedbackPolicy& policy, const Plant& plant,
                                  const CostParams& cost, const NoiseSpec& noise) {
  return policy_rollout(policy, plant, cost, noise, true);
}

RolloutResult closed_loop_rollout(const FeedbackPolicy& policy, const ModelParams& params,
                                  const CostParams& cost, const NoiseSpec& noise) {
  return closed_loop_rollout(policy, make_plant(params), cost, noise);
}

RolloutResult open_loop_rollout(const FeedbackPolicy& policy, const Plant& plant,
                                const CostParams& cost, const NoiseSpec& noise) {
  return policy_rollout(policy, plant, cost, noise, false);
}

RolloutResult open_loop_rollout(const FeedbackPolicy& policy, const ModelParams& params,
                                const CostParams& cost, const NoiseSpec& noise) {
  return open_loop_rollout(policy, make_plant(params), cost, noise);
}

RolloutResult mpc_rollout(const Plant& plant, const Vector& initial, const CostParams& cost,
                          const MpcOptions& opts, const NoiseSpec& noise, double noise_scale,
                          std::vector<Vector> warm_start) {
  const int T = opts.inner.horizon;
  if (T < 1) throw ConfigError("mpc horizon must be >= 1");
  if (!warm_start.empty() && static_cast<int>(warm_start.size()) != T) {
    throw ConfigError("mpc warm start length does not match the horizon");
  }
  NoiseSource source(noise, noise_scale);
  RolloutResult r;
  r.trajectory.states.push_back(initial);
  std::vector<Vector> guess = std::move(warm_start);
  for (int step = 0; step < T; ++step) {
    ILQROptions inner = opts.inner;
    inner.horizon = T - step;
    inner.max_iters = opts.inner_iters;
    inner.lls_cd.seed = derive_seed(opts.inner.lls_cd.seed, static_cast<std::uint64_t>(step));
    OpenLoopResult solved;
    try {
      solved = optimize_open_loop(plant, r.trajectory.states.back(), cost, inner, guess);
    } catch (const StalledError& e) {
      throw StalledError("mpc step " + std::to_string(step) + ": " + e.what(), e.history());
    }
    const std::vector<Vector>& plan = solved.trajectory.controls;
    advance(r.trajectory, plant, cost, step, source.perturb(plant.clip(plan.front())));
    guess.assign(plan.begin() + 1, plan.end());
  }
  finish(r, cost);
  return r;
}

RolloutResult mpc_rollout(const PhaseField& initial, const PhaseField& goal,
                          const ModelParams& params, const CostParams& cost,
                          const MpcOptions& opts, const NoiseSpec& noise, double noise_scale,
                          std::vector<Vector> warm_start) {
  CostParams c = cost;
  c.goal = goal.values();
  return mpc_rollout(make_plant(params), initial.values(), c, opts, noise, noise_scale,
                     std::move(warm_start));
}

Vector BaselineControl::stacked() const {
  Vector out(2 * t_bar.size());
  for (Eigen::Index k = 0; k < t_bar.size(); ++k) {
    out[2 * k] = t_bar[k];
    out[2 * k + 1] = h_bar[k];
  }
  return out;
}

BaselineControl baseline_control(const PhaseField& goal) {
  const Vector& phi = goal.values();
  BaselineControl c;
  c.t_bar.resize(phi.size());
  c.h_bar.resize(phi.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    const double f = phi[k];
    const double denom = 1.0 + 4.0 * f * f;
    c.t_bar[k] = -8.0 * f * f * f * f / denom;
    c.h_bar[k] = -4.0 * f * f * f / denom;
  }
  return c;
}

double baseline_residual(const BaselineControl& control, const PhaseField& goal) {
  const Vector& phi = goal.values();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    const double f = phi[k];
    worst = std::max(worst,
                     std::abs(4.0 * f * f * f + 2.0 * f * control.t_bar[k] + control.h_bar[k]));
  }
  return worst;
}

RolloutResult baseline_rollout(const Plant& plant, const PhaseField& initial,
                               const PhaseField& goal, const CostParams& cost, int steps,
                               const NoiseSpec& noise) {
  if (steps < 0) throw ConfigError("baseline steps must be >= 0");
  const Vector u = plant.clip(baseline_control(goal).stacked());
  NoiseSource source(noise, u.size() > 0 ? u.cwiseAbs().maxCoeff() : 0.0);
  CostParams c = cost;
  c.goal = goal.values();
  RolloutResult r;
  r.trajectory.states.push_back(initial.values());
  for (int t = 0; t < steps; ++t) advance(r.trajectory, plant, c, t, source.perturb(plant.clip(u)));
  finish(r, c);
  return r;
}

RolloutResult baseline_rollout(const PhaseField& initial, const PhaseField& goal,
                               const ModelParams& params, const CostParams& cost, int steps,
                               const NoiseSpec& noise) {
  return baseline_rollout(make_plant(params), initial, goal, cost, steps, noise);
}

}  // namespace phasectl
