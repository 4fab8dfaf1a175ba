#include "phasectl/config.hpp"
#include "phasectl/harness.hpp"
#include "phasectl/parallel.hpp"
#include "phasectl/pipeline.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace phasectl;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key = value config file");
  cmd->add_option("--set", c.overrides, "override one config key (key=value); repeatable");
}

// File keys are stored absolute so a manifest replays from any working directory.
void absolutize_paths(FlatConfig& cfg, const fs::path& base) {
  for (const char* key : {"goal.file", "initial.file", "simulate.control_file"}) {
    std::string& v = cfg.at(key);
    if (!v.empty() && fs::path(v).is_relative()) v = fs::absolute(base / v).lexically_normal().string();
  }
}

FlatConfig gather(const Common& c) {
  FlatConfig cfg = default_config();
  if (!c.config_path.empty()) {
    cfg = load_config_file(c.config_path);
    absolutize_paths(cfg, fs::path(c.config_path).parent_path());
  }
  for (const std::string& o : c.overrides) apply_override(cfg, o);
  absolutize_paths(cfg, fs::current_path());
  return cfg;
}

// --threads, then PHASECTL_THREADS, then run.threads. Never written back into the config.
int effective_threads(int flag, const FlatConfig& cfg) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PHASECTL_THREADS"); env && *env) {
    int v = 0;
    const std::string s(env);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1) {
      throw ConfigError("PHASECTL_THREADS = '" + s + "' is not a positive integer");
    }
    return v;
  }
  int v = 0;
  const std::string& s = cfg.at("run.threads");
  std::from_chars(s.data(), s.data() + s.size(), v);
  return resolve_threads(v);
}

void set_threads(RunConfig& rc, int threads) {
  rc.threads = threads;
  rc.ilqr.threads = threads;
  rc.sysid.threads = threads;
  rc.sweep.threads = threads;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

// Control file: n lines of 2n comma-separated values, T and h interleaved per cell.
Vector read_control_file(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<double> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(item, &used));
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + item + "'");
      }
    }
  }
  if (static_cast<int>(vals.size()) != grid.control_dim()) {
    throw ParseError(path + ": expected " + std::to_string(grid.control_dim()) +
                     " control values, found " + std::to_string(vals.size()));
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

int cmd_simulate(const RunConfig& rc, const fs::path& out) {
  const GridSpec& g = rc.model.grid;
  Vector u;
  if (rc.simulate.control == "zero") {
    u = Vector::Zero(g.control_dim());
  } else if (rc.simulate.control == "uniform") {
    u = ControlField::uniform(g, rc.simulate.t, rc.simulate.h).stacked();
  } else {
    if (rc.simulate.control_file.empty()) throw ConfigError("--control file needs simulate.control_file");
    u = read_control_file(rc.simulate.control_file, g);
  }
  const Vector applied = clip_controls(u, rc.model.bounds);
  ensure_dir(out);
  write_text(out / "manifest.json", encode_manifest(rc.flat));
  Vector phi = rc.initial.values();
  auto snapshot = [&](int t) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d.csv", t);
    write_field(PhaseField(g, phi), out / name, FieldFormat::text);
  };
  snapshot(0);
  for (int t = 1; t <= rc.simulate.steps; ++t) {
    try {
      phi = step_flat(phi, applied, rc.model);
    } catch (const BlowupError& e) {
      throw BlowupError(std::string(e.what()) + " at step " + std::to_string(t), e.row(), e.col(), t);
    }
    if (t % rc.simulate.stride == 0 || t == rc.simulate.steps) snapshot(t);
  }
  write_field(PhaseField(g, phi), out / "final.csv", FieldFormat::text);
  std::cout << "simulate: " << rc.simulate.steps << " steps, dt = " << fmt(rc.model.dt)
            << ", final mean = " << fmt(phi.mean()) << ", min = " << fmt(phi.minCoeff())
            << ", max = " << fmt(phi.maxCoeff()) << "\n";
  return 0;
}

D2CDesign run_design(const RunConfig& rc, const fs::path& out) {
  const DesignSettings s = rc.design();
  std::cout << "design: " << to_string(rc.model.pde) << " " << rc.model.grid.n << "x"
            << rc.model.grid.n << ", horizon " << rc.ilqr.horizon << ", dt = " << fmt(rc.model.dt)
            << ", open-loop parameters = " << s.open_loop_parameter_count() << "\n";
  D2CDesign d = d2c_design(s);
  save_design(d, out);
  write_text(out / "iterations.csv", encode_iteration_log_csv(d.open_loop.history));
  write_field(rc.goal, out / "goal.csv", FieldFormat::text);
  write_field(PhaseField(rc.model.grid, d.policy.nominal.states.back()), out / "final.csv",
              FieldFormat::text);
  std::cout << "design: nominal cost = " << fmt(d.policy.nominal.total_cost)
            << ", terminal mse = " << fmt(terminal_mse(d.policy.nominal, rc.cost.goal))
            << ", iterations = " << d.open_loop.history.size() - 1
            << (d.open_loop.converged ? " (converged)" : " (iteration cap)") << "\n";
  return d;
}

int cmd_design(RunConfig rc, const fs::path& out) {
  ensure_dir(out);
  write_text(out / "manifest.json", encode_manifest(rc.flat));
  run_design(rc, out);
  return 0;
}

int cmd_rollout(const RunConfig& rc, const std::string& policy_path, const std::string& strategy_name,
                double noise, std::uint64_t seed, const std::string& out) {
  const Strategy strategy = parse_strategy(strategy_name);
  if (!(noise >= 0.0)) throw ConfigError("--noise must be >= 0");
  std::optional<FeedbackPolicy> policy;
  if (strategy != Strategy::baseline) {
    if (policy_path.empty()) throw ConfigError("--policy is required for strategy " + strategy_name);
    policy = load_policy(policy_path);
  }
  SweepProblem problem = rc.sweep_problem();
  problem.policy = policy;
  const RolloutResult r = run_strategy(problem, strategy, NoiseSpec{noise, seed});
  if (!out.empty()) {
    ensure_dir(out);
    write_field(PhaseField(rc.model.grid, r.trajectory.states.back()), fs::path(out) / "final.csv",
                FieldFormat::text);
  }
  std::cout << "strategy=" << to_string(strategy) << " noise=" << fmt(noise) << " seed=" << seed
            << " episodic_cost=" << fmt(r.episodic_cost) << " terminal_mse=" << fmt(r.terminal_mse);
  if (policy) std::cout << " nominal_cost=" << fmt(policy->nominal.total_cost);
  std::cout << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& rc, const fs::path& out) {
  ensure_dir(out);
  write_text(out / "manifest.json", encode_manifest(rc.flat));
  SweepProblem problem = rc.sweep_problem();
  ResultFiles extras;
  extras.goal = rc.goal;
  bool needs_policy = false;
  for (Strategy s : rc.sweep.strategies) needs_policy |= s != Strategy::baseline;
  if (needs_policy) {
    D2CDesign d = run_design(rc, out);
    extras.history = d.open_loop.history;
    extras.final_state = PhaseField(rc.model.grid, d.policy.nominal.states.back());
    problem.policy = std::move(d.policy);
  }
  const SweepResult result = run_sweep(problem, rc.sweep);
  write_results(result, rc.flat, extras, out);
  for (const CellStats& c : result.cells) {
    std::cout << to_string(c.strategy) << " level=" << fmt(c.noise_level)
              << " mean=" << fmt(c.mean_cost) << " std=" << fmt(c.std_cost) << " n=" << c.n
              << " failed=" << c.n_failed << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field optimal control: simulate, design, roll out and benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: PHASECTL_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  Common sim_c, des_c, rol_c, swp_c;
  int sim_steps = -1;
  std::string sim_control, sim_out = "", des_goal, des_out, rol_policy, rol_strategy = "closed-loop",
                           rol_out, swp_levels, swp_strategies, swp_out, swp_manifest;
  double rol_noise = 0.0;
  std::uint64_t rol_seed = 0;
  int swp_rollouts = 0;

  auto* sim = app.add_subcommand("simulate", "free or fixed-control evolution with snapshots");
  add_common(sim, sim_c);
  sim->add_option("--steps", sim_steps, "number of steps");
  sim->add_option("--control", sim_control, "zero | uniform | file")
      ->check(CLI::IsMember({"zero", "uniform", "file"}));
  sim->add_option("--out", sim_out, "output directory");

  auto* des = app.add_subcommand("design", "open-loop ILQR, LTV identification, LQR gains");
  add_common(des, des_c);
  des->add_option("--goal", des_goal, "goal field file (overrides goal.kind)");
  des->add_option("--out", des_out, "output directory");

  auto* rol = app.add_subcommand("rollout", "one noisy rollout of a strategy");
  add_common(rol, rol_c);
  rol->add_option("--policy", rol_policy, "policy.ppol from a design run");
  rol->add_option("--strategy", rol_strategy, "open-loop | closed-loop | mpc | baseline");
  rol->add_option("--noise", rol_noise, "noise level (fraction of max nominal control)");
  rol->add_option("--seed", rol_seed, "noise seed");
  rol->add_option("--out", rol_out, "write final.csv here");

  auto* swp = app.add_subcommand("sweep", "noise sweep over strategies");
  add_common(swp, swp_c);
  swp->add_option("--levels", swp_levels, "comma-separated noise levels");
  swp->add_option("--rollouts", swp_rollouts, "rollouts per level");
  swp->add_option("--strategies", swp_strategies, "comma-separated strategies");
  swp->add_option("--out", swp_out, "output directory");
  swp->add_option("--manifest", swp_manifest, "replay the config recorded in a manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      FlatConfig cfg = gather(sim_c);
      if (sim_steps >= 0) cfg["simulate.steps"] = std::to_string(sim_steps);
      if (!sim_control.empty()) cfg["simulate.control"] = sim_control;
      if (!sim_out.empty()) cfg["output.dir"] = sim_out;
      RunConfig rc = build_run_config(cfg);
      set_threads(rc, effective_threads(threads, cfg));
      return cmd_simulate(rc, rc.output_dir);
    }
    if (des->parsed()) {
      FlatConfig cfg = gather(des_c);
      if (!des_goal.empty()) {
        cfg["goal.kind"] = "file";
        cfg["goal.file"] = fs::absolute(des_goal).string();
      }
      if (!des_out.empty()) cfg["output.dir"] = des_out;
      RunConfig rc = build_run_config(cfg);
      set_threads(rc, effective_threads(threads, cfg));
      return cmd_design(rc, rc.output_dir);
    }
    if (rol->parsed()) {
      FlatConfig cfg = gather(rol_c);
      RunConfig rc = build_run_config(cfg);
      set_threads(rc, effective_threads(threads, cfg));
      return cmd_rollout(rc, rol_policy, rol_strategy, rol_noise, rol_seed, rol_out);
    }
    if (swp->parsed()) {
      FlatConfig cfg;
      if (!swp_manifest.empty()) {
        if (!swp_c.config_path.empty() || !swp_c.overrides.empty() || !swp_levels.empty() ||
            !swp_strategies.empty() || swp_rollouts > 0) {
          throw ConfigError("--manifest replays a recorded run; it cannot be combined with "
                            "--config, --set, --levels, --rollouts or --strategies");
        }
        cfg = default_config();
        for (const auto& [k, v] : load_manifest(swp_manifest)) {
          if (!cfg.contains(k)) throw ConfigError("manifest: unknown key '" + k + "'");
          cfg[k] = v;
        }
      } else {
        cfg = gather(swp_c);
        if (!swp_levels.empty()) cfg["sweep.levels"] = swp_levels;
        if (!swp_strategies.empty()) cfg["sweep.strategies"] = swp_strategies;
        if (swp_rollouts > 0) cfg["sweep.rollouts"] = std::to_string(swp_rollouts);
      }
      if (!swp_out.empty()) cfg["output.dir"] = swp_out;
      RunConfig rc = build_run_config(cfg);
      set_threads(rc, effective_threads(threads, cfg));
      return cmd_sweep(rc, rc.output_dir);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
