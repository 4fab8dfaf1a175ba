#include "phasectl/harness.hpp"

#include "csvnum.hpp"
#include "fileio.hpp"
#include "phasectl/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#ifndef PHASECTL_VERSION
#define PHASECTL_VERSION "unknown"
#endif

namespace phasectl {

namespace {
constexpr const char* kSweepHeader = "strategy,noise_level,mean_cost,std_cost,min,max,n,n_failed";
constexpr const char* kRawHeader = "strategy,noise_level,rollout,seed,cost,failed";
constexpr const char* kConvergenceHeader = "iteration,cost";
constexpr const char* kIterationHeader = "iteration,cost,mu,alpha,accepted";
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}
}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "open-loop") return Strategy::open_loop;
  if (name == "closed-loop") return Strategy::closed_loop;
  if (name == "mpc") return Strategy::mpc;
  if (name == "baseline") return Strategy::baseline;
  throw ConfigError("unknown strategy '" + name + "' (open-loop, closed-loop, mpc, baseline)");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::open_loop: return "open-loop";
    case Strategy::closed_loop: return "closed-loop";
    case Strategy::mpc: return "mpc";
    case Strategy::baseline: return "baseline";
  }
  return "?";
}

std::vector<Strategy> parse_strategy_list(const std::string& text) {
  std::vector<Strategy> out;
  if (trim(text).empty()) return out;
  for (const std::string& item : split(text, ',')) {
    const Strategy s = parse_strategy(trim(item));
    if (std::find(out.begin(), out.end(), s) != out.end()) {
      throw ConfigError("strategy '" + to_string(s) + "' listed twice");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> parse_level_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    const std::string t = trim(item);
    double v = 0.0;
    if (!csvnum::parse(t, v) || !std::isfinite(v)) {
      throw ConfigError("noise level '" + t + "' is not a number");
    }
    if (v < 0.0) throw ConfigError("noise level '" + t + "' is negative");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("noise level list is empty");
  return out;
}

std::vector<double> default_noise_levels() {
  std::vector<double> levels;
  for (int i = 0; i <= 10; ++i) levels.push_back(i / 10.0);
  return levels;
}

void SweepConfig::validate() const {
  if (rollouts_per_level < 1) throw ConfigError("rollouts per level must be >= 1");
  if (noise_levels.empty()) throw ConfigError("at least one noise level is required");
  for (double l : noise_levels) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("noise levels must be finite and >= 0");
  }
}

std::uint64_t rollout_seed(std::uint64_t base_seed, int level_index, int rollout_index) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(level_index),
                     static_cast<std::uint64_t>(rollout_index));
}

CellStats summarize(Strategy strategy, double level, std::vector<double> raw_costs) {
  CellStats s;
  s.strategy = strategy;
  s.noise_level = level;
  s.n = static_cast<int>(raw_costs.size());
  // Sums run relative to the first success so identical costs give exactly zero spread.
  double shift = 0.0;
  for (double c : raw_costs) {
    if (std::isfinite(c)) {
      shift = c;
      break;
    }
  }
  double sum = 0.0;
  int ok = 0;
  s.min_cost = kInf;
  s.max_cost = -kInf;
  for (double c : raw_costs) {
    if (!std::isfinite(c)) {
      ++s.n_failed;
      continue;
    }
    ++ok;
    sum += c - shift;
    s.min_cost = std::min(s.min_cost, c);
    s.max_cost = std::max(s.max_cost, c);
  }
  if (ok == 0) {
    s.mean_cost = s.std_cost = s.min_cost = s.max_cost = kInf;
  } else {
    const double offset = sum / ok;
    s.mean_cost = shift + offset;
    double ss = 0.0;
    for (double c : raw_costs) {
      if (std::isfinite(c)) ss += (c - shift - offset) * (c - shift - offset);
    }
    s.std_cost = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
  }
  s.raw_costs = std::move(raw_costs);
  return s;
}

namespace {

RolloutResult run_strategy(const SweepProblem& problem, const Plant& plant, const CostParams& cost,
                           Strategy strategy, const NoiseSpec& noise) {
  if (strategy != Strategy::baseline && !problem.policy) {
    throw ConfigError("strategy " + to_string(strategy) + " needs a designed policy");
  }
  switch (strategy) {
    case Strategy::open_loop:
      return open_loop_rollout(*problem.policy, plant, cost, noise);
    case Strategy::closed_loop:
      return closed_loop_rollout(*problem.policy, plant, cost, noise);
    case Strategy::mpc: {
      MpcOptions opts = problem.mpc;
      opts.inner.horizon = problem.policy->horizon();
      opts.inner.threads = 1;
      return mpc_rollout(plant, problem.policy->nominal.states.front(), cost, opts, noise,
                         problem.policy->max_nominal_control(), problem.policy->nominal.controls);
    }
    case Strategy::baseline:
      return baseline_rollout(plant, problem.initial, problem.goal, cost, problem.baseline_steps,
                              noise);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace

RolloutResult run_strategy(const SweepProblem& problem, Strategy strategy, const NoiseSpec& noise) {
  const Plant plant = make_plant(problem.model.resolved());
  CostParams cost = problem.cost;
  cost.goal = problem.goal.values();
  cost.validate(plant.state_dim);
  return run_strategy(problem, plant, cost, strategy, noise);
}

SweepResult run_sweep(const SweepProblem& problem, const SweepConfig& cfg) {
  cfg.validate();
  const ModelParams params = problem.model.resolved();
  const Plant plant = make_plant(params);
  CostParams cost = problem.cost;
  cost.goal = problem.goal.values();
  cost.validate(plant.state_dim);

  for (Strategy s : cfg.strategies) {
    if (s != Strategy::baseline && !problem.policy) {
      throw ConfigError("strategy " + to_string(s) + " needs a designed policy");
    }
  }
  if (problem.policy && problem.policy->nominal.states.front().size() != plant.state_dim) {
    throw ConfigError("policy state dimension does not match the model grid");
  }

  const int levels = static_cast<int>(cfg.noise_levels.size());
  const int per = cfg.rollouts_per_level;
  const int strategies = static_cast<int>(cfg.strategies.size());
  const int total = strategies * levels * per;
  std::vector<double> costs(static_cast<std::size_t>(total), kInf);

  parallel_for(total, cfg.threads, [&](int idx) {
    const int s = idx / (levels * per);
    const int l = (idx / per) % levels;
    const int r = idx % per;
    const NoiseSpec noise{cfg.noise_levels[l], rollout_seed(cfg.base_seed, l, r)};
    try {
      const RolloutResult out = run_strategy(problem, plant, cost, cfg.strategies[s], noise);
      costs[idx] = std::isfinite(out.episodic_cost) ? out.episodic_cost : kInf;
    } catch (const NumericalError&) {
      costs[idx] = kInf;  // blowup or inner stall: a failed cell, not a crash
    }
  });

  SweepResult result;
  for (int s = 0; s < strategies; ++s) {
    for (int l = 0; l < levels; ++l) {
      const auto first = costs.begin() + (s * levels + l) * per;
      CellStats cell = summarize(cfg.strategies[s], cfg.noise_levels[l],
                                 std::vector<double>(first, first + per));
      for (int r = 0; r < per; ++r) cell.seeds.push_back(rollout_seed(cfg.base_seed, l, r));
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::string encode_sweep_csv(const SweepResult& result) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const CellStats& c : result.cells) {
    out += to_string(c.strategy) + "," + csvnum::format(c.noise_level) + "," +
           csvnum::format(c.mean_cost) + "," + csvnum::format(c.std_cost) + "," +
           csvnum::format(c.min_cost) + "," + csvnum::format(c.max_cost) + "," +
           std::to_string(c.n) + "," + std::to_string(c.n_failed) + "\n";
  }
  return out;
}

SweepResult parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 1;
  auto fail = [&](const std::string& msg) {
    throw ParseError("sweep.csv line " + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) fail("missing header");
  if (trim(line) != kSweepHeader) fail("header mismatch, expected '" + std::string(kSweepHeader) + "'");
  SweepResult result;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 8) fail("expected 8 fields, got " + std::to_string(f.size()));
    CellStats c;
    try {
      c.strategy = parse_strategy(f[0]);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    double* reals[] = {&c.noise_level, &c.mean_cost, &c.std_cost, &c.min_cost, &c.max_cost};
    for (int k = 0; k < 5; ++k) {
      if (!csvnum::parse(f[1 + k], *reals[k])) fail("field " + std::to_string(k + 2) + " is not a number");
    }
    double n = 0, nf = 0;
    if (!csvnum::parse(f[6], n) || !csvnum::parse(f[7], nf)) fail("bad rollout counts");
    c.n = static_cast<int>(n);
    c.n_failed = static_cast<int>(nf);
    result.cells.push_back(std::move(c));
  }
  return result;
}

std::string encode_raw_costs_csv(const SweepResult& result) {
  std::string out = std::string(kRawHeader) + "\n";
  for (const CellStats& c : result.cells) {
    for (std::size_t r = 0; r < c.raw_costs.size(); ++r) {
      const bool failed = !std::isfinite(c.raw_costs[r]);
      out += to_string(c.strategy) + "," + csvnum::format(c.noise_level) + "," +
             std::to_string(r) + "," + (r < c.seeds.size() ? std::to_string(c.seeds[r]) : "") +
             "," + csvnum::format(c.raw_costs[r]) + "," + (failed ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string encode_convergence_csv(const std::vector<IterationRecord>& history) {
  std::string out = std::string(kConvergenceHeader) + "\n";
  for (const IterationRecord& r : history) {
    out += std::to_string(r.iteration) + "," + csvnum::format(r.cost) + "\n";
  }
  return out;
}

std::string encode_iteration_log_csv(const std::vector<IterationRecord>& history) {
  std::string out = std::string(kIterationHeader) + "\n";
  for (const IterationRecord& r : history) {
    out += std::to_string(r.iteration) + "," + csvnum::format(r.cost) + "," +
           csvnum::format(r.mu) + "," + csvnum::format(r.alpha) + "," +
           (r.accepted ? "1" : "0") + "\n";
  }
  return out;
}

std::string code_version() { return PHASECTL_VERSION; }

std::string encode_manifest(const std::map<std::string, std::string>& config) {
  nlohmann::json j;
  j["code_version"] = code_version();
  j["config"] = config;
  j["schemas"] = {{"version", kCsvSchemaVersion},
                  {"sweep.csv", kSweepHeader},
                  {"raw_costs.csv", kRawHeader},
                  {"convergence.csv", kConvergenceHeader},
                  {"iterations.csv", kIterationHeader}};
  return j.dump(2) + "\n";
}

std::map<std::string, std::string> decode_manifest(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!j.is_object() || !j.contains("config") || !j["config"].is_object()) {
    throw ParseError("manifest: missing \"config\" object");
  }
  if (j.contains("schemas") && j["schemas"].value("version", 0) != kCsvSchemaVersion) {
    throw ParseError("manifest: unsupported schema version");
  }
  std::map<std::string, std::string> config;
  for (const auto& [key, value] : j["config"].items()) {
    if (!value.is_string()) throw ParseError("manifest: config value for '" + key + "' is not a string");
    config[key] = value.get<std::string>();
  }
  return config;
}

std::map<std::string, std::string> load_manifest(const std::filesystem::path& path) {
  return decode_manifest(fileio::slurp(path));
}

void write_results(const SweepResult& result, const std::map<std::string, std::string>& config,
                   const ResultFiles& extras, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  fileio::dump(dir / "manifest.json", encode_manifest(config));
  fileio::dump(dir / "sweep.csv", encode_sweep_csv(result));
  fileio::dump(dir / "raw_costs.csv", encode_raw_costs_csv(result));
  if (extras.history) {
    fileio::dump(dir / "convergence.csv", encode_convergence_csv(*extras.history));
    fileio::dump(dir / "iterations.csv", encode_iteration_log_csv(*extras.history));
  }
  if (extras.goal) write_field(*extras.goal, dir / "goal.csv", FieldFormat::text);
  if (extras.final_state) write_field(*extras.final_state, dir / "final.csv", FieldFormat::text);
}

}  // namespace phasectl
