import numpy as np
import pytest

import phasectl


def test_goal_and_counts():
    goal = phasectl.as_grid(phasectl.make_goal(10, "banded", 2))
    assert goal.shape == (10, 10)
    assert (goal[:5] == 1).all() and (goal[5:] == -1).all()
    assert phasectl.open_loop_parameter_count(10, 10) == 2000
    assert phasectl.open_loop_parameter_count(50, 10) == 50000


def test_config_errors_map_to_exceptions():
    with pytest.raises(phasectl.ConfigError, match="unknown key"):
        phasectl.Run({"grid.size": "3"})
    with pytest.raises(phasectl.ConfigError):
        phasectl.Run({"model.dt": "0.5"})
    assert issubclass(phasectl.BlowupError, phasectl.NumericalError)
    assert issubclass(phasectl.NumericalError, phasectl.PhasectlError)


def test_cahn_hilliard_step_conserves_mass():
    run = phasectl.Run({"grid.n": "8", "model.pde": "cahn-hilliard"})
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, 64)
    u = phasectl.stack_controls(rng.uniform(-5, 5, 64), rng.uniform(-5, 5, 64))
    y = run.step(x, u)
    assert abs(y.sum() - x.sum()) < 1e-12


def test_jacobian_estimate_matches_analytic():
    run = phasectl.Run({"grid.n": "4", "goal.partitions": "2"})
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 16)
    u = rng.uniform(-3, 3, 32)
    a, b = run.analytic_jacobians(x, u)
    ea, eb = run.estimate_jacobians(x, u)
    ref = np.hstack([a, b])
    assert np.linalg.norm(np.hstack([ea, eb]) - ref) / np.linalg.norm(ref) < 1e-2


def test_baseline_is_steady_state():
    goal = phasectl.make_goal(4, "checkerboard", 2)
    t, h = phasectl.baseline_control(goal)
    residual = 4 * goal**3 + 2 * t * goal + h
    assert np.abs(residual).max() < 1e-12


def test_design_rollout_and_sweep(tmp_path):
    run = phasectl.run(grid_n=4, goal_partitions=2, ilqr_horizon=10, sweep_levels="0,0.3",
                       sweep_rollouts=3)
    design = run.design()
    assert design.policy.parameter_count == 10 * 32
    assert design.history[0]["iteration"] == 0
    assert np.mean((design.final_state - run.goal) ** 2) < 1e-2

    quiet = run.rollout("closed-loop", design.policy, noise=0.0)
    assert quiet["episodic_cost"] == design.nominal_cost
    noisy = run.rollout("open-loop", design.policy, noise=0.3, seed=5)
    assert noisy["episodic_cost"] == run.rollout("open-loop", design.policy, noise=0.3, seed=5)["episodic_cost"]
    with pytest.raises(phasectl.ConfigError):
        run.rollout("mpc")

    rows, csv = run.sweep(design.policy)
    assert [r["strategy"] for r in rows] == ["open-loop"] * 2 + ["closed-loop"] * 2
    assert rows[0]["std_cost"] == 0.0
    assert csv.startswith("strategy,noise_level,mean_cost,std_cost,min,max,n,n_failed\n")

    path = tmp_path / "policy.ppol"
    design.policy.save(path)
    again = phasectl.Policy.load(path)
    assert again.nominal_cost == design.nominal_cost
    assert len(again.gains) == 10
