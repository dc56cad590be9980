"""Reference configurations shared by the scenario runner and the test-suite.

Every configuration is a plain dictionary of JSON-compatible values so it can
be embedded in run manifests; the ``build_*`` helpers turn them into objects.
"""

from __future__ import annotations

import math
from typing import Dict, Tuple

import numpy as np

from .qcore import DensityOperator, Grid, LinearOperator, SampleSet, WaveFunction, free_hamiltonian
from .seqmeas import HistorySpec

# free Gaussian packet, half-line then unit interval, Gaussian square-root POVM
INTERFERENCE = {
    "grid": {"n_points": 1024, "half_width": 25.6},
    "mass": 1.0,
    "sigma": 1.0,
    "t1": 0.0,
    "t2": 1.0,
    "delta": 0.1,
    "u1": [0.0, None],
    "u2": [0.0, 1.0],
}

# resolution sensitivity with sharp cells, both slots the right half-line
SENSITIVITY = {
    "grid": {"n_points": 2048, "half_width": 25.6},
    "mass": 1.0,
    "sigma": 1.0,
    "t1": 0.0,
    "t2": 1.0,
    "delta": 0.05,
    "u1": [0.0, None],
    "u2": [0.0, None],
}

# closed-form kernels versus the dense square-root POVM
CLOSED_FORM = {
    "grid": {"n_points": 256, "half_width": 20.48},
    "mass": 1.0,
    "time": 1.0,
    "delta": 0.6,
    "u1": [-1.0, 1.0],
    "u2": [0.0, 2.0],
    "pair_range": 3.0,
    "n_pairs": 20,
    "seed": 2024,
}

NORMALIZATION = {
    "grid": {"n_points": 128, "half_width": 12.8},
    "mass": 1.0,
    "delta": 0.5,
    "times": [0.0, 0.5, 1.0],
}

NOGO = {
    "grid": {"n_points": 128, "half_width": 12.8},
    "mass": 1.0,
    "delta": 0.2,
    "t1": 0.0,
    "t2": 1.0,
    "u1": [0.0, None],
    "u2": [0.0, None],
}

# two symmetric slits and the first-slot-unrestricted density
TWO_SLIT = {
    "grid": {"n_points": 512, "half_width": 64.0},
    "mass": 1.0,
    "time": 10.0,
    "sigma": 1.0,
    "separation": 6.0,
    "delta": math.sqrt(5.0),
}

BOHM = {
    "cat": {"grid": {"n_points": 512, "half_width": 25.6}, "offset": 4.0, "momentum": 1.5,
            "times": [0.0, 1.0, 2.0, 3.0, 4.0], "checkpoints": [1.0, 2.0, 4.0]},
    "n_samples": 10000,
    "seed": 3,
}

HIDDEN_VARIABLES = {
    "sigma": 1.0,
    "mass": 1.0,
    "t1": 0.5,
    "t2": 1.5,
    "u1": [0.0, None],
    "u2": [0.0, 1.0],
    "diffusion": 0.5,
    "coupling": 0.5,
    "n_samples": 100000,
    "seed": 11,
}

FREQUENCY = {
    "grid": {"n_points": 2048, "half_width": 25.6},
    "mass": 1.0,
    "sigma": 1.0,
    "t1": 0.0,
    "t2": 1.0,
    "u1": [0.0, None],
    "u2": [0.0, 1.0],
    "deltas": [0.05, 0.2],
    "block": 1000,
    "growth": 2.0,
    "n_runs": 100000,
    "seed": 7,
    "bernoulli_p": 0.05,
}

APPARATUS = {
    "grid": {"n_points": 128, "half_width": 12.8},
    "mass": 1.0,
    "sigma": 1.0,
    "t1": 0.5,
    "t2": 1.5,
    "period": 40.0,
    "n_k": 63,
    "sigma_k": [0.5, 0.8],
    "edges": [-0.5, 1.5],
}

RABI = {"time": math.pi / 4, "copies": 6, "counts": [2, 3]}

NEUTRON_BUDGET = {"length": 0.01, "d": 1e-4, "v_z": 1e4}


def build_grid(cfg: Dict) -> Grid:
    return Grid.centered(int(cfg["n_points"]), float(cfg["half_width"]))


def build_set(pair) -> SampleSet:
    """``[a, b]`` with ``None`` for an infinite endpoint."""
    a, b = pair
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if a == -math.inf and b == math.inf:
        return SampleSet.omega()
    if a == -math.inf:
        return SampleSet.left_half(b)
    if b == math.inf:
        return SampleSet.right_half(a)
    return SampleSet.interval(a, b)


def gaussian_setup(cfg: Dict) -> Tuple[Grid, LinearOperator, WaveFunction, DensityOperator]:
    grid = build_grid(cfg["grid"])
    ham = free_hamiltonian(grid, float(cfg["mass"]))
    psi = WaveFunction.gaussian(grid, 0.0, float(cfg.get("sigma", 1.0)))
    return grid, ham, psi, DensityOperator.from_wavefunction(psi)


def two_time_history(cfg: Dict) -> HistorySpec:
    return HistorySpec.of((float(cfg["t1"]), build_set(cfg["u1"])), (float(cfg["t2"]), build_set(cfg["u2"])))


def cat_state(grid: Grid, offset: float, momentum: float) -> WaveFunction:
    """Two counter-propagating Gaussian packets at ``+-offset``."""
    x = grid.x
    amp = (np.exp(-((x - offset) ** 2) / 4.0 + 1j * momentum * x)
           + np.exp(-((x + offset) ** 2) / 4.0 - 1j * momentum * x))
    return WaveFunction(grid, amp).normalize()


def coarse_sets(edges) -> Tuple[SampleSet, ...]:
    """Three sets split at two edges: left half-line, interval, right half-line."""
    a, b = edges
    return (SampleSet.left_half(a), SampleSet.interval(a, b), SampleSet.right_half(b))


def qubit_projectors():
    """``z`` and ``x`` eigenprojectors of a qubit (all entries dyadic)."""
    pz = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
    px = (0.5 * np.array([[1, 1], [1, 1]], dtype=complex), 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex))
    return pz, px


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
