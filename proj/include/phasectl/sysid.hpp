#pragma once

#include "phasectl/dynamics.hpp"
#include "phasectl/ilqr.hpp"
#include "phasectl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace phasectl {

enum class SysIdMode {
  simulation_least_squares,  // one-sided perturbation rollouts, [A|B] = Y X^T (X X^T)^-1
  lls_cd_reuse,              // central-difference estimator from the jacobian module
  analytic_oracle,           // exact Jacobians of the stepper
};

SysIdMode parse_sysid_mode(const std::string& name);
std::string to_string(SysIdMode mode);

struct SysIdConfig {
  double sigma = 1e-4;
  int n_rollouts = 0;  // 0 selects 2 * (n_x + n_u)
  std::uint64_t seed = 2;
  SysIdMode mode = SysIdMode::lls_cd_reuse;
  int threads = 1;

  int resolved_rollouts(int dim) const { return n_rollouts > 0 ? n_rollouts : 2 * dim; }
};

// Perturbation model around every step of `nominal`. Steps are independent and
// perturbed around the nominal point, not around the previous perturbed state.
LTVModel identify_ltv(const Trajectory& nominal, const Plant& plant, const SysIdConfig& cfg);
LTVModel identify_ltv(const Trajectory& nominal, const ModelParams& params, const SysIdConfig& cfg);

// "LTVM", version 0x01, u32 horizon, u32 n_x, u32 n_u, then per step A and B
// row-major as little-endian f64.
std::string encode_ltv(const LTVModel& model);
LTVModel decode_ltv(const std::string& bytes);
void save_ltv(const LTVModel& model, const std::filesystem::path& path);
LTVModel load_ltv(const std::filesystem::path& path);

}  // namespace phasectl
