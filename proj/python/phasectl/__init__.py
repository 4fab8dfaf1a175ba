"""Phase-field optimal control: simulation, D2C design and noisy-rollout benchmarks."""

import numpy as np

from ._core import (
    BlowupError,
    ConfigError,
    Design,
    EstimationError,
    IoError,
    NumericalError,
    ParseError,
    PhasectlError,
    Policy,
    Run,
    StalledError,
    baseline_control,
    code_version,
    default_config,
    load_config,
    make_goal,
    open_loop_parameter_count,
)

__version__ = code_version()


def as_grid(values):
    """Reshape a flattened field (k = i*n + j) to an (n, n) array."""
    values = np.asarray(values)
    n = int(round(np.sqrt(values.size)))
    if n * n != values.size:
        raise ValueError(f"{values.size} values do not form a square grid")
    return values.reshape(n, n)


def stack_controls(t, h):
    """Interleave per-cell T and h into the stacked control vector [T_0, h_0, T_1, ...]."""
    t = np.ravel(np.asarray(t, dtype=float))
    h = np.ravel(np.asarray(h, dtype=float))
    if t.shape != h.shape:
        raise ValueError("T and h must have the same shape")
    out = np.empty(2 * t.size)
    out[0::2] = t
    out[1::2] = h
    return out


def run(**overrides):
    """Run from keyword overrides, e.g. run(grid_n=10) for grid.n (first '_' becomes '.')."""
    cfg = {}
    for key, value in overrides.items():
        section, _, rest = key.partition("_")
        cfg[f"{section}.{rest}"] = str(value)
    return Run(cfg)


__all__ = [
    "BlowupError",
    "ConfigError",
    "Design",
    "EstimationError",
    "IoError",
    "NumericalError",
    "ParseError",
    "PhasectlError",
    "Policy",
    "Run",
    "StalledError",
    "as_grid",
    "baseline_control",
    "code_version",
    "default_config",
    "load_config",
    "make_goal",
    "open_loop_parameter_count",
    "run",
    "stack_controls",
]
