#pragma once

#include "phasectl/grid.hpp"
#include "phasectl/ilqr.hpp"
#include "phasectl/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phasectl {

enum class Strategy { open_loop, closed_loop, mpc, baseline };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy strategy);
// Comma-separated list, e.g. "open-loop,closed-loop". Duplicates are rejected.
std::vector<Strategy> parse_strategy_list(const std::string& text);
std::vector<double> parse_level_list(const std::string& text);

std::vector<double> default_noise_levels();

struct SweepConfig {
  std::vector<double> noise_levels = default_noise_levels();
  int rollouts_per_level = 100;
  std::vector<Strategy> strategies = {Strategy::open_loop, Strategy::closed_loop};
  std::uint64_t base_seed = 7;
  int threads = 1;

  void validate() const;
};

// Noise stream of one rollout. Strategy does not enter, so every strategy sees the same
// draws at a given (level, rollout) cell.
std::uint64_t rollout_seed(std::uint64_t base_seed, int level_index, int rollout_index);

// What the strategies need. The policy is required for open-loop, closed-loop and MPC
// (its nominal controls warm-start MPC and set the noise reference).
struct SweepProblem {
  ModelParams model;
  CostParams cost;
  PhaseField initial = PhaseField::zeros(GridSpec{});
  PhaseField goal = PhaseField::zeros(GridSpec{});
  std::optional<FeedbackPolicy> policy;
  MpcOptions mpc;
  int baseline_steps = 10;
};

struct CellStats {
  Strategy strategy = Strategy::open_loop;
  double noise_level = 0.0;
  // Over successful rollouts only; +inf when every rollout failed.
  double mean_cost = 0.0;
  double std_cost = 0.0;  // sample standard deviation, 0 with a single success
  double min_cost = 0.0;
  double max_cost = 0.0;
  int n = 0;  // rollouts attempted
  int n_failed = 0;
  std::vector<double> raw_costs;  // per rollout, +inf for a failure
  std::vector<std::uint64_t> seeds;
};

struct SweepResult {
  std::vector<CellStats> cells;  // strategy-major, then level, in config order
};

// One rollout of a strategy; the same dispatch the sweep uses for each cell.
RolloutResult run_strategy(const SweepProblem& problem, Strategy strategy, const NoiseSpec& noise);

CellStats summarize(Strategy strategy, double level, std::vector<double> raw_costs);

SweepResult run_sweep(const SweepProblem& problem, const SweepConfig& cfg);

// strategy,noise_level,mean_cost,std_cost,min,max,n,n_failed
std::string encode_sweep_csv(const SweepResult& result);
SweepResult parse_sweep_csv(const std::string& text);
// strategy,noise_level,rollout,seed,cost,failed
std::string encode_raw_costs_csv(const SweepResult& result);
// iteration,cost
std::string encode_convergence_csv(const std::vector<IterationRecord>& history);
// iteration,cost,mu,alpha,accepted
std::string encode_iteration_log_csv(const std::vector<IterationRecord>& history);

inline constexpr int kCsvSchemaVersion = 1;

std::string code_version();

// Sorted-key JSON holding the flat run configuration, the code version and the CSV
// schema versions. Replaying the config reproduces sweep.csv byte for byte.
std::string encode_manifest(const std::map<std::string, std::string>& config);
std::map<std::string, std::string> decode_manifest(const std::string& text);
std::map<std::string, std::string> load_manifest(const std::filesystem::path& path);

struct ResultFiles {
  std::optional<std::vector<IterationRecord>> history;  // writes convergence.csv when set
  std::optional<PhaseField> goal;
  std::optional<PhaseField> final_state;
};

// Writes sweep.csv, raw_costs.csv, manifest.json and, when present, convergence.csv,
// iterations.csv, goal.csv and final.csv.
void write_results(const SweepResult& result, const std::map<std::string, std::string>& config,
                   const ResultFiles& extras, const std::filesystem::path& dir);

}  // namespace phasectl
