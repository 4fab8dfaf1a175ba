#pragma once

#include "phasectl/dynamics.hpp"
#include "phasectl/grid.hpp"
#include "phasectl/harness.hpp"
#include "phasectl/ilqr.hpp"
#include "phasectl/lqr.hpp"
#include "phasectl/pipeline.hpp"
#include "phasectl/sysid.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace phasectl {

// Flat key=value configuration. Every key has a default; unknown keys are rejected.
using FlatConfig = std::map<std::string, std::string>;

FlatConfig default_config();

// `source` names the input in error messages ("run.cfg:12: ...").
// Lines are `key = value`; '#' starts a comment; blank lines are ignored.
FlatConfig parse_config_text(const std::string& text, const std::string& source,
                             FlatConfig base = default_config());
FlatConfig load_config_file(const std::filesystem::path& path);
// One `key=value` override, validated against the known keys.
void apply_override(FlatConfig& config, const std::string& assignment);

std::string encode_config_text(const FlatConfig& config);

enum class InitialKind { zero, constant, random, file };

struct SimulateSettings {
  int steps = 100;
  int stride = 10;
  std::string control = "zero";  // zero | uniform | file
  double t = 0.0;
  double h = 0.0;
  std::string control_file;
};

// Typed view of a FlatConfig. Relative file paths resolve against `base_dir`.
struct RunConfig {
  FlatConfig flat;
  ModelParams model;  // dt resolved
  CostParams cost;    // goal filled in
  PhaseField goal = PhaseField::zeros(GridSpec{});
  PhaseField initial = PhaseField::zeros(GridSpec{});
  ILQROptions ilqr;
  SysIdConfig sysid;
  RiccatiOptions lqr;
  MpcOptions mpc;
  SweepConfig sweep;
  int baseline_steps = 10;
  SimulateSettings simulate;
  std::filesystem::path output_dir;
  int threads = 0;  // resolved worker count

  DesignSettings design() const;
  SweepProblem sweep_problem() const;
};

RunConfig build_run_config(const FlatConfig& config,
                           const std::filesystem::path& base_dir = std::filesystem::path("."));

}  // namespace phasectl
