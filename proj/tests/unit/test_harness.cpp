#include "doctest.h"
#include "helpers.hpp"

#include "phasectl/errors.hpp"
#include "phasectl/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace phasectl;

namespace {

SweepProblem tiny_problem() {
  SweepProblem p;
  p.model = testing::ac_params(3);
  p.initial = PhaseField::zeros(p.model.grid);
  p.goal = make_goal(p.model.grid, GoalKind::banded, 3).field;
  p.cost.goal = p.goal.values();
  DesignSettings s;
  s.model = p.model;
  s.cost = p.cost;
  s.initial = p.initial;
  s.ilqr.horizon = 4;
  p.policy = d2c_design(s).policy;
  p.mpc.inner = s.ilqr;
  p.mpc.inner_iters = 3;
  p.baseline_steps = 4;
  return p;
}

SweepConfig tiny_config() {
  SweepConfig c;
  c.noise_levels = {0.0, 0.3};
  c.rollouts_per_level = 6;
  c.strategies = {Strategy::open_loop, Strategy::closed_loop, Strategy::baseline};
  return c;
}

}  // namespace

TEST_CASE("strategy and level parsing") {
  CHECK(parse_strategy("mpc") == Strategy::mpc);
  CHECK(to_string(Strategy::closed_loop) == "closed-loop");
  CHECK(parse_strategy_list("baseline,open-loop").size() == 2);
  CHECK_THROWS_AS(parse_strategy("ddpg"), ConfigError);
  CHECK_THROWS_AS(parse_strategy_list("mpc,mpc"), ConfigError);
  CHECK(parse_strategy_list("").empty());
  const std::vector<double> levels = parse_level_list("0,0.25,1");
  REQUIRE(levels.size() == 3);
  CHECK(levels[1] == 0.25);
  CHECK_THROWS_AS(parse_level_list("0,-1"), ConfigError);
  CHECK_THROWS_AS(parse_level_list("0,x"), ConfigError);
  const std::vector<double> d = default_noise_levels();
  REQUIRE(d.size() == 11);
  CHECK(d.front() == 0.0);
  CHECK(d.back() == 1.0);
  CHECK(d[3] == 0.3);
}

TEST_CASE("rollout seeds are distinct per cell and ignore strategy") {
  CHECK(rollout_seed(7, 0, 0) != rollout_seed(7, 0, 1));
  CHECK(rollout_seed(7, 0, 1) != rollout_seed(7, 1, 0));
  CHECK(rollout_seed(7, 2, 3) == rollout_seed(7, 2, 3));
  CHECK(rollout_seed(7, 2, 3) != rollout_seed(8, 2, 3));
}

TEST_CASE("summary statistics match a direct recomputation") {
  const std::vector<double> costs = {3.0, 1.0, std::numeric_limits<double>::infinity(), 5.0, 2.0};
  const CellStats s = summarize(Strategy::open_loop, 0.5, costs);
  CHECK(s.n == 5);
  CHECK(s.n_failed == 1);
  CHECK(s.mean_cost == doctest::Approx(2.75));
  // Sample variance of {3,1,5,2}: (0.0625+3.0625+5.0625+0.5625)/3.
  CHECK(s.std_cost == doctest::Approx(std::sqrt(8.75 / 3.0)));
  CHECK(s.min_cost == 1.0);
  CHECK(s.max_cost == 5.0);

  const CellStats one = summarize(Strategy::mpc, 0.1, {4.0});
  CHECK(one.std_cost == 0.0);
  const CellStats same = summarize(Strategy::mpc, 0.1, {231.4254, 231.4254, 231.4254});
  CHECK(same.std_cost == 0.0);
  const CellStats none = summarize(Strategy::mpc, 0.1, {HUGE_VAL, HUGE_VAL});
  CHECK(std::isinf(none.mean_cost));
  CHECK(std::isinf(none.std_cost));
  CHECK(none.n_failed == 2);
}

TEST_CASE("sweep cells, zero-noise spread and worker invariance") {
  const SweepProblem p = tiny_problem();
  SweepConfig c = tiny_config();
  const SweepResult a = run_sweep(p, c);
  REQUIRE(a.cells.size() == 6);
  CHECK(a.cells[0].strategy == Strategy::open_loop);
  CHECK(a.cells[1].noise_level == 0.3);
  CHECK(a.cells[4].strategy == Strategy::baseline);
  for (const CellStats& cell : a.cells) {
    CHECK(cell.n == 6);
    CHECK(cell.n_failed == 0);
    if (cell.noise_level == 0.0) CHECK(cell.std_cost == 0.0);
    else CHECK(cell.std_cost > 0.0);
  }
  CHECK(a.cells[0].mean_cost == p.policy->nominal.total_cost);
  // Common random numbers: same seeds in every strategy at a given level.
  CHECK(a.cells[1].seeds == a.cells[3].seeds);

  c.threads = 4;
  const SweepResult b = run_sweep(p, c);
  CHECK(encode_sweep_csv(a) == encode_sweep_csv(b));
  CHECK(encode_raw_costs_csv(a) == encode_raw_costs_csv(b));
}

TEST_CASE("mpc cells run and stay below the open-loop spread") {
  const SweepProblem p = tiny_problem();
  SweepConfig c;
  c.noise_levels = {0.0};
  c.rollouts_per_level = 2;
  c.strategies = {Strategy::mpc};
  const SweepResult r = run_sweep(p, c);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].n_failed == 0);
  CHECK(r.cells[0].mean_cost <= p.policy->nominal.total_cost * (1.0 + 1e-4));
}

TEST_CASE("sweep without a policy only allows the baseline") {
  SweepProblem p = tiny_problem();
  p.policy.reset();
  SweepConfig c = tiny_config();
  CHECK_THROWS_AS(run_sweep(p, c), ConfigError);
  c.strategies = {Strategy::baseline};
  CHECK(run_sweep(p, c).cells.size() == 2);
}

TEST_CASE("blown-up rollouts count as failures") {
  SweepProblem p = tiny_problem();
  // Noise is not clipped, so an absurd level drives the explicit scheme unstable.
  p.baseline_steps = 50;
  SweepConfig c;
  c.noise_levels = {1e3};
  c.rollouts_per_level = 3;
  c.strategies = {Strategy::baseline};
  const SweepResult r = run_sweep(p, c);
  CHECK(r.cells[0].n_failed == 3);
  CHECK(std::isinf(r.cells[0].mean_cost));
  const std::string csv = encode_raw_costs_csv(r);
  CHECK(csv.find(",inf,1\n") != std::string::npos);
}

TEST_CASE("sweep csv encode and parse") {
  const SweepResult a = run_sweep(tiny_problem(), tiny_config());
  const std::string text = encode_sweep_csv(a);
  CHECK(text.rfind("strategy,noise_level,mean_cost,std_cost,min,max,n,n_failed\n", 0) == 0);
  const SweepResult b = parse_sweep_csv(text);
  REQUIRE(b.cells.size() == a.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(b.cells[i].strategy == a.cells[i].strategy);
    CHECK(std::abs(b.cells[i].mean_cost - a.cells[i].mean_cost) <= 1e-12 * a.cells[i].mean_cost);
    CHECK(std::abs(b.cells[i].std_cost - a.cells[i].std_cost) <= 1e-12 * a.cells[i].mean_cost);
    CHECK(b.cells[i].n == a.cells[i].n);
  }
  CHECK(encode_sweep_csv(b) == text);

  SweepConfig empty = tiny_config();
  empty.strategies.clear();
  CHECK(encode_sweep_csv(run_sweep(tiny_problem(), empty)) ==
        "strategy,noise_level,mean_cost,std_cost,min,max,n,n_failed\n");

  CHECK_THROWS_AS(parse_sweep_csv("strategy,level\n"), ParseError);
  try {
    parse_sweep_csv(text + "open-loop,0.1,abc,0,0,0,1,0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string line = "line " + std::to_string(a.cells.size() + 2);
    CHECK(std::string(e.what()).find(line) != std::string::npos);
  }
}

TEST_CASE("convergence and iteration logs") {
  std::vector<IterationRecord> h = {{0, 10.0, 1e-6, 0.0, true}, {1, 4.5, 5e-7, 1.0, true},
                                    {2, 4.5, 5e-6, 0.0, false}};
  CHECK(encode_convergence_csv(h) == "iteration,cost\n0,10\n1,4.5\n2,4.5\n");
  CHECK(encode_iteration_log_csv(h) ==
        "iteration,cost,mu,alpha,accepted\n0,10,1e-06,0,1\n1,4.5,5e-07,1,1\n2,4.5,5e-06,0,0\n");
}

TEST_CASE("manifest round trip and result files") {
  std::map<std::string, std::string> cfg = {{"grid.n", "3"}, {"sweep.levels", "0,0.3"}};
  const std::string text = encode_manifest(cfg);
  CHECK(text.find("\"code_version\"") != std::string::npos);
  CHECK(decode_manifest(text) == cfg);
  CHECK_THROWS_AS(decode_manifest("{not json"), ParseError);
  CHECK_THROWS_AS(decode_manifest("{\"schemas\": {}}"), ParseError);

  const auto dir = std::filesystem::temp_directory_path() / "phasectl_harness_test";
  std::filesystem::remove_all(dir);
  const SweepProblem p = tiny_problem();
  ResultFiles extras;
  extras.history = std::vector<IterationRecord>{{0, 1.0, 1e-6, 0.0, true}};
  extras.goal = p.goal;
  write_results(run_sweep(p, tiny_config()), cfg, extras, dir);
  for (const char* f : {"manifest.json", "sweep.csv", "raw_costs.csv", "convergence.csv",
                        "iterations.csv", "goal.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "final.csv"));
  CHECK(load_manifest(dir / "manifest.json") == cfg);
  CHECK(read_field(dir / "goal.csv").values() == p.goal.values());
  std::filesystem::remove_all(dir);
}
