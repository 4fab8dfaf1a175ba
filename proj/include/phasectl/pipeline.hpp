#pragma once

#include "phasectl/dynamics.hpp"
#include "phasectl/grid.hpp"
#include "phasectl/ilqr.hpp"
#include "phasectl/lqr.hpp"
#include "phasectl/sysid.hpp"
#include "phasectl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace phasectl {

// Everything a D2C design needs. `cost.goal` is the flattened goal field.
struct DesignSettings {
  ModelParams model;
  CostParams cost;
  PhaseField initial = PhaseField::zeros(GridSpec{});
  ILQROptions ilqr;
  SysIdConfig sysid;
  RiccatiOptions lqr;

  // Number of open-loop decision variables: horizon * 2 n^2.
  long long open_loop_parameter_count() const;
};

long long open_loop_parameter_count(const GridSpec& grid, int horizon);

// Nominal trajectory plus time-varying gains; u_t = ubar_t + K_t (x_t - xbar_t).
struct FeedbackPolicy {
  Trajectory nominal;
  std::vector<Matrix> gains;

  int horizon() const { return nominal.horizon(); }
  long long open_loop_parameter_count() const;
  // Largest |ubar| over steps and channels; the reference for noise levels.
  double max_nominal_control() const;
};

struct D2CDesign {
  OpenLoopResult open_loop;
  LTVModel model;
  FeedbackPolicy policy;
  double max_riccati_asymmetry = 0.0;
};

// Open-loop ILQR, then LTV identification around the optimum, then Riccati gains.
D2CDesign d2c_design(const DesignSettings& settings);

// Writes policy.ppol, ltv.ltvm and convergence.csv into `dir`.
void save_design(const D2CDesign& design, const std::filesystem::path& dir);

// "PPOL", version 0x01, u32 horizon, u32 n_x, u32 n_u, f64 nominal cost, then states,
// controls and gains (row-major), all little-endian f64.
std::string encode_policy(const FeedbackPolicy& policy);
FeedbackPolicy decode_policy(const std::string& bytes);
void save_policy(const FeedbackPolicy& policy, const std::filesystem::path& path);
FeedbackPolicy load_policy(const std::filesystem::path& path);

// Noise std per control channel is level * reference magnitude; level 0 draws nothing.
struct NoiseSpec {
  double level = 0.0;
  std::uint64_t seed = 0;
};

struct RolloutResult {
  Trajectory trajectory;
  double episodic_cost = 0.0;
  double terminal_mse = 0.0;
};

// Applied control is clip(u_t) + level * scale * w_t with w_t ~ N(0, I); the same seed
// gives the same w sequence for every strategy.
RolloutResult closed_loop_rollout(const FeedbackPolicy& policy, const Plant& plant,
                                  const CostParams& cost, const NoiseSpec& noise);
RolloutResult closed_loop_rollout(const FeedbackPolicy& policy, const ModelParams& params,
                                  const CostParams& cost, const NoiseSpec& noise);
RolloutResult open_loop_rollout(const FeedbackPolicy& policy, const Plant& plant,
                                const CostParams& cost, const NoiseSpec& noise);
RolloutResult open_loop_rollout(const FeedbackPolicy& policy, const ModelParams& params,
                                const CostParams& cost, const NoiseSpec& noise);

struct MpcOptions {
  ILQROptions inner;  // horizon is overwritten at every re-solve
  int inner_iters = 10;
};

// Shrinking-horizon replanning: solve from the current state over the remaining steps,
// apply the first control with noise, shift the solution tail as the next warm start.
// `warm_start` seeds the first solve (usually the one-shot nominal controls) and
// `noise_scale` is the reference magnitude for the noise level.
RolloutResult mpc_rollout(const Plant& plant, const Vector& initial, const CostParams& cost,
                          const MpcOptions& opts, const NoiseSpec& noise, double noise_scale,
                          std::vector<Vector> warm_start = {});
RolloutResult mpc_rollout(const PhaseField& initial, const PhaseField& goal,
                          const ModelParams& params, const CostParams& cost,
                          const MpcOptions& opts, const NoiseSpec& noise, double noise_scale,
                          std::vector<Vector> warm_start = {});

// Time-invariant control that makes the goal a steady state of the diffusion-free
// Allen-Cahn ODE at minimum control effort.
struct BaselineControl {
  Vector t_bar;
  Vector h_bar;

  Vector stacked() const;
};

BaselineControl baseline_control(const PhaseField& goal);
// max_k |4 phi^3 + 2 phi T + h| over the goal cells.
double baseline_residual(const BaselineControl& control, const PhaseField& goal);

// Applies the fixed baseline control for `steps` steps; noise is scaled by the largest
// baseline control magnitude.
RolloutResult baseline_rollout(const Plant& plant, const PhaseField& initial,
                               const PhaseField& goal, const CostParams& cost, int steps,
                               const NoiseSpec& noise);
RolloutResult baseline_rollout(const PhaseField& initial, const PhaseField& goal,
                               const ModelParams& params, const CostParams& cost, int steps,
                               const NoiseSpec& noise);

}  // namespace phasectl
