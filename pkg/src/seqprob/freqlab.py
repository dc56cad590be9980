"""Relative frequencies of sequential outcomes.

Running relative-frequency traces and their non-convergence measure, Monte
Carlo samplers for sequential Gaussian square-root measurements (fixed
resolution and block-correlated resolution mixtures), frequency operators on
tensor-power spaces, and the decoherence-ratio and conditional-marginal
comparisons for discrete observables.

The resolution-mixture ensemble is a hypothesis simulator: it does not
represent a prediction of standard quantum mechanics.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .qcore import DensityOperator, IncompatibleOutcome, LinearOperator, SampleSet, WaveFunction, apply_propagator
from .rng import block_generator
from .seqmeas import (
    HistorySpec,
    PovmKind,
    _mat,
    _unitary,
    complement_histories,
    decoherence_functional,
    history_probability,
)

CHUNK = 4096
EXPLICIT_DIM_CAP = 2**10


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrequencyTrace:
    """Running relative frequency ``nu_n = hits_n / n`` for ``n = 1..n_runs``.

    ``counts`` holds the integer running hit counts, so every ``nu_n`` is the
    correctly rounded value of an exact rational.
    """

    counts: np.ndarray
    n_runs: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or len(c) != self.n_runs or self.n_runs < 1:
            raise ValueError("counts must hold one running tally per run")
        steps = np.diff(np.concatenate([[0], c]))
        if np.any((steps != 0) & (steps != 1)):
            raise ValueError("running counts must increase by 0 or 1")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def nu(self) -> np.ndarray:
        return self.counts / np.arange(1, self.n_runs + 1)

    @property
    def hits(self) -> int:
        return int(self.counts[-1])

    def to_csv(self, stride: int = 1) -> str:
        nu = self.nu
        rows = ["n,nu"] + [f"{n + 1},{nu[n]!r}" for n in range(0, self.n_runs, stride)]
        return "\n".join(rows) + "\n"


def trace_from_hits(hits) -> FrequencyTrace:
    """Trace of a boolean hit sequence."""
    h = np.asarray(hits, dtype=bool)
    if h.size == 0:
        raise ValueError("empty outcome sequence")
    return FrequencyTrace(np.cumsum(h, dtype=np.int64), int(h.size))


def frequency_trace(outcomes, sets: Sequence) -> FrequencyTrace:
    """Trace of the event ``x_k in U_k`` for every slot.

    ``outcomes`` has shape ``(n_runs, n_slots)``; sets are ``SampleSet``
    objects (real readings) or index tuples (discrete readings).
    """
    out = np.asarray(outcomes)
    if out.ndim == 1:
        out = out[:, None]
    if out.shape[0] == 0:
        raise ValueError("empty outcome sequence")
    if out.shape[1] != len(sets):
        raise ValueError("one set per outcome slot required")
    hit = np.ones(out.shape[0], dtype=bool)
    for k, u in enumerate(sets):
        if isinstance(u, SampleSet):
            hit &= u.contains(out[:, k].astype(float))
        else:
            hit &= np.isin(out[:, k], np.asarray(tuple(u)))
    return trace_from_hits(hit)


def default_burn(n_runs: int) -> int:
    """Largest burn-in ``N`` with ``n_runs > 2 N``."""
    return (n_runs - 1) // 2


def nonconvergence_measure(trace: FrequencyTrace, n_burn: Optional[int] = None) -> float:
    """``sup_{n, m > N_burn} |nu_n - nu_m|`` over the recorded trace."""
    if n_burn is None:
        n_burn = default_burn(trace.n_runs)
    if n_burn < 0 or trace.n_runs <= 2 * n_burn:
        raise ValueError(f"trace too short: n_runs={trace.n_runs} must exceed 2*N_burn={2 * n_burn}")
    tail = trace.nu[n_burn:]
    return float(tail.max() - tail.min())


def bernoulli_trace(p: float, n: int, seed: int = 0) -> FrequencyTrace:
    """Trace of ``n`` independent Bernoulli(p) trials."""
    rng = block_generator(seed, 11)
    return trace_from_hits(rng.random(n) < p)


@dataclass(frozen=True)
class DecaySlope:
    checkpoints: np.ndarray
    rms_error: np.ndarray
    slope: float
    intercept: float


def bernoulli_decay_slope(p: float, n_min: int = 10**3, n_max: int = 10**6, n_checkpoints: int = 13,
                          replicates: int = 400, seed: int = 0) -> DecaySlope:
    """Log-log slope of the RMS deviation ``|nu_n - p|`` of Bernoulli traces.

    Each replicate trace is advanced between log-spaced checkpoints with
    binomial increments, which has the same law as the full trace at the
    checkpoints.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    rng = block_generator(seed, 12)
    ns = np.unique(np.round(np.geomspace(n_min, n_max, n_checkpoints)).astype(np.int64))
    counts = np.zeros(replicates, dtype=np.int64)
    prev = 0
    rms = []
    for n in ns:
        counts += rng.binomial(int(n - prev), p, size=replicates)
        prev = n
        rms.append(math.sqrt(np.mean((counts / n - p) ** 2)))
    rms = np.asarray(rms)
    slope, intercept = np.polyfit(np.log(ns), np.log(rms), 1)
    return DecaySlope(ns, rms, float(slope), float(intercept))


# ---------------------------------------------------------------------------
# sequential samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaPolicy:
    """Resolution assignment per run.

    ``fixed``: every run uses ``deltas[0]``.  ``mixture``: with ``block=None``
    each run draws ``delta`` independently with ``weights``; otherwise the
    support is cycled through in consecutive blocks whose lengths start at
    ``block`` and grow by ``growth`` per block (time-correlated draws).
    """

    kind: str
    deltas: Tuple[float, ...]
    weights: Optional[Tuple[float, ...]] = None
    block: Optional[int] = None
    growth: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "mixture"):
            raise ValueError("policy kind must be 'fixed' or 'mixture'")
        if not self.deltas or any(not d > 0 for d in self.deltas):
            raise ValueError("resolution support must be positive")
        if self.kind == "fixed" and len(self.deltas) != 1:
            raise ValueError("fixed policy takes one resolution")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(self.deltas) or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
                raise ValueError("weights must be a probability vector over the support")
        if self.block is not None and self.block < 1:
            raise ValueError("block length must be positive")
        if self.growth < 1.0:
            raise ValueError("block growth must be at least 1")

    @classmethod
    def fixed(cls, delta: float) -> "DeltaPolicy":
        return cls("fixed", (float(delta),))

    @classmethod
    def mixture(cls, deltas, weights=None, block: Optional[int] = None, growth: float = 1.0) -> "DeltaPolicy":
        return cls("mixture", tuple(float(d) for d in deltas),
                   None if weights is None else tuple(float(w) for w in weights), block, growth)

    def assign(self, n_runs: int, seed: int) -> np.ndarray:
        """Index into ``deltas`` for every run."""
        if self.kind == "fixed" or len(self.deltas) == 1:
            return np.zeros(n_runs, dtype=np.int64)
        if self.block is None:
            rng = block_generator(seed, 13)
            w = self.weights or tuple(1.0 / len(self.deltas) for _ in self.deltas)
            return rng.choice(len(self.deltas), size=n_runs, p=w)
        out = np.empty(n_runs, dtype=np.int64)
        start, j, length = 0, 0, float(self.block)
        while start < n_runs:
            stop = min(n_runs, start + int(round(length)))
            out[start:stop] = j % len(self.deltas)
            start, j, length = stop, j + 1, length * self.growth
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "deltas": list(self.deltas),
                "weights": None if self.weights is None else list(self.weights),
                "block": self.block, "growth": self.growth}


@dataclass(frozen=True)
class EnsembleSpec:
    n_runs: int
    seed: int
    history: HistorySpec
    policy: DeltaPolicy

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        for u in self.history.sets:
            if not isinstance(u, SampleSet):
                raise ValueError("sampler histories need position sample sets")


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    readings: np.ndarray
    delta_index: np.ndarray
    deltas: Tuple[float, ...]

    def trace(self, sets: Sequence) -> FrequencyTrace:
        return frequency_trace(self.readings, sets)


def _pure_components(rho0) -> Tuple[np.ndarray, np.ndarray]:
    """Amplitude vectors (rows) and weights of a state."""
    if isinstance(rho0, WaveFunction):
        return rho0.amplitudes[None, :], np.ones(1)
    if isinstance(rho0, DensityOperator):
        dx = rho0.grid.dx
        w, v = np.linalg.eigh(rho0.matrix)
        keep = w * dx > 1e-12
        w, v = w[keep] * dx, v[:, keep]
        return (v / math.sqrt(dx)).T, w / w.sum()
    raise TypeError("state must be a WaveFunction or DensityOperator")


def _sample_positions(dens: np.ndarray, grid, rng) -> np.ndarray:
    """One draw per row of a piecewise-constant density on the grid cells."""
    cdf = np.cumsum(dens, axis=-1)
    cdf /= cdf[:, -1:]
    u = rng.random(dens.shape[0])
    idx = np.minimum((cdf < u[:, None]).sum(axis=1), grid.n_points - 1)
    return grid.x[idx] + (rng.random(dens.shape[0]) - 0.5) * grid.dx


def _sample_block(psi: np.ndarray, h: HistorySpec, ham: LinearOperator, delta: float, rng) -> np.ndarray:
    """Sequential readings for the rows of ``psi`` at one resolution."""
    grid = ham.grid
    if delta < 2 * grid.dx:
        raise ValueError(f"delta={delta} under-resolved on grid with dx={grid.dx}")
    out = np.empty((psi.shape[0], len(h)))
    t_prev = 0.0
    for k, t in enumerate(h.times):
        psi = apply_propagator(ham, t - t_prev, psi)
        t_prev = t
        y = _sample_positions(np.abs(psi) ** 2, grid, rng)
        x = y + delta * rng.standard_normal(psi.shape[0])
        out[:, k] = x
        if k + 1 < len(h):
            psi = psi * np.exp(-((grid.x[None, :] - x[:, None]) ** 2) / (4.0 * delta**2))
            nrm = np.sqrt(np.sum(np.abs(psi) ** 2, axis=1))
            if np.any(nrm < 1e-300):
                raise IncompatibleOutcome("zero-probability branch in sequential sampling")
            psi = psi / nrm[:, None]
    return out


def sample_sequential_run(rho0, h: HistorySpec, ham: LinearOperator, delta: float, rng) -> Tuple[float, ...]:
    """One sequential run: readings ``(x_1, ..., x_n)``.

    Each reading is drawn from the current unsharp single-time law, the state
    is updated by ``sqrt(Pi_x)``, renormalised and evolved to the next time.
    """
    comps, w = _pure_components(rho0)
    c = rng.choice(len(w), p=w) if len(w) > 1 else 0
    return tuple(float(v) for v in _sample_block(comps[c][None, :], h, ham, delta, rng)[0])


def run_ensemble(spec: EnsembleSpec, rho0, ham: LinearOperator, threads: int = 1) -> EnsembleResult:
    """Sample ``spec.n_runs`` sequential runs.

    Runs are processed in fixed chunks of ``CHUNK``; chunk ``c`` uses the
    stream keyed by ``(seed, c)``, so results are identical for any thread
    count.
    """
    comps, w = _pure_components(rho0)
    assign = spec.policy.assign(spec.n_runs, spec.seed)
    n_chunks = -(-spec.n_runs // CHUNK)

    def work(c: int) -> np.ndarray:
        lo, hi = c * CHUNK, min(spec.n_runs, (c + 1) * CHUNK)
        rng = block_generator(spec.seed, 1000 + c)
        comp = rng.choice(len(w), size=hi - lo, p=w) if len(w) > 1 else np.zeros(hi - lo, dtype=np.int64)
        out = np.empty((hi - lo, len(spec.history)))
        for j, d in enumerate(spec.policy.deltas):
            sel = np.where(assign[lo:hi] == j)[0]
            if sel.size:
                out[sel] = _sample_block(comps[comp[sel]], spec.history, ham, d, rng)
        return out

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    return EnsembleResult(np.concatenate(parts, axis=0), assign, spec.policy.deltas)


def mixture_ensemble_trace(spec: EnsembleSpec, rho0, ham: LinearOperator, threads: int = 1) -> FrequencyTrace:
    """Frequency trace of the history event under the ensemble's resolution policy."""
    return run_ensemble(spec, rho0, ham, threads).trace(spec.history.sets)


def binned_joint(readings: np.ndarray, edges: Sequence[np.ndarray]) -> np.ndarray:
    """Empirical joint law of the readings on a product of bins (open outer bins)."""
    idx = [np.searchsorted(e, readings[:, k], side="right") for k, e in enumerate(edges)]
    shape = tuple(len(e) + 1 for e in edges)
    flat = np.ravel_multi_index(idx, shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape) / readings.shape[0]


def bin_sets(edges: np.ndarray) -> List[SampleSet]:
    """Sample sets of the bins ``(-inf, e0), [e0, e1), ..., [e_last, inf)``."""
    e = list(edges)
    out = [SampleSet.left_half(e[0])]
    out += [SampleSet.interval(a, b) for a, b in zip(e[:-1], e[1:])]
    out.append(SampleSet.right_half(e[-1]))
    return out


# ---------------------------------------------------------------------------
# decoherence ratio
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecoherenceRatio:
    ratio: float
    d_alpha: float
    d_cross: complex
    n_complements: int


def decoherence_ratio(rho0, h: HistorySpec, ham, kind: PovmKind) -> DecoherenceRatio:
    """``2 Re d(alpha, not alpha) / d(alpha, alpha)``.

    ``not alpha`` is the complement of the product set, expanded as the sum of
    the disjoint slot-complement products; the decoherence values are summed.
    """
    d_aa = history_probability(rho0, h, ham, kind)
    if d_aa < 1e-14:
        raise ValueError(f"d(alpha, alpha) = {d_aa:.3e} too small")
    comps = complement_histories(h, kind)
    cross = sum((decoherence_functional(rho0, h, b, ham, kind).value for b in comps), 0j)
    return DecoherenceRatio(float(2.0 * cross.real / d_aa), float(d_aa), complex(cross), len(comps))


# ---------------------------------------------------------------------------
# frequency operators
# ---------------------------------------------------------------------------


def _check_effect(e: np.ndarray):
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ValueError("effect must be a square matrix")
    if e.shape[0] > 4:
        raise ValueError("single-copy dimension must be at most 4")
    if np.max(np.abs(e - e.conj().T)) > 1e-12:
        raise ValueError("effect must be Hermitian")
    w = np.linalg.eigvalsh(e)
    if w.min() < -1e-12 or w.max() > 1 + 1e-12:
        raise ValueError("effect must satisfy 0 <= E <= 1")


def count_operators(n_copies: int, effect) -> List[np.ndarray]:
    """Explicit ``Pi_E(n/N)`` for ``n = 0..N`` on the ``N``-fold tensor space.

    ``Pi_E(n/N) = sum over n-subsets of E on the subset and 1 - E elsewhere``,
    built by the recursion ``M_N(n) = M_{N-1}(n-1) (x) E + M_{N-1}(n) (x) (1 - E)``.
    """
    e = np.asarray(effect, dtype=complex)
    _check_effect(e)
    d = e.shape[0]
    if d**n_copies > EXPLICIT_DIM_CAP:
        raise ValueError(f"explicit tensor space {d}^{n_copies} exceeds the cap {EXPLICIT_DIM_CAP}")
    f = np.eye(d) - e
    ops = [np.ones((1, 1), dtype=complex)]
    for _ in range(n_copies):
        nxt = []
        for n in range(len(ops) + 1):
            m = 0
            if n >= 1:
                m = m + np.kron(ops[n - 1], e)
            if n < len(ops):
                m = m + np.kron(ops[n], f)
            nxt.append(m)
        ops = nxt
    return ops


@dataclass(frozen=True, eq=False)
class FrequencyPvm:
    """Frequency effects ``Pi_P(n/N)`` of a single-copy projector ``P``."""

    n_copies: int
    projector: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.projector, dtype=complex)
        _check_effect(p)
        if np.max(np.abs(p @ p - p)) > 1e-12:
            raise ValueError("frequency PVM needs a projector")
        if not 1 <= self.n_copies <= 20:
            raise ValueError("number of copies must lie in [1, 20]")
        object.__setattr__(self, "projector", p)

    def single_probability(self, psi) -> float:
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        return float(np.real(v.conj() @ self.projector @ v))

    def distribution(self, psi) -> np.ndarray:
        """``<psi^N| Pi(n/N) |psi^N>`` for ``n = 0..N`` (binomial bookkeeping)."""
        p = self.single_probability(psi)
        n = self.n_copies
        return np.array([comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(n + 1)])

    def statistics(self, psi) -> Tuple[float, float]:
        """Mean and variance of ``F = sum (n/N) Pi(n/N)`` in the product state."""
        dist = self.distribution(psi)
        f = np.arange(self.n_copies + 1) / self.n_copies
        mean = float(np.sum(f * dist))
        return mean, float(np.sum((f - mean) ** 2 * dist))

    def matrices(self) -> List[np.ndarray]:
        return count_operators(self.n_copies, self.projector)

    def frequency_operator(self) -> np.ndarray:
        return sum((n / self.n_copies) * m for n, m in enumerate(self.matrices()))


def frequency_pvm(n_copies: int, projector, count: int, explicit: bool = False):
    """``Pi_P(count/N)``: a ``FrequencyPvm`` handle, or its matrix when ``explicit``."""
    pvm = FrequencyPvm(n_copies, projector)
    if not 0 <= count <= n_copies:
        raise ValueError("count must lie in [0, N]")
    return pvm.matrices()[count] if explicit else pvm


def explicit_statistics(pvm: FrequencyPvm, psi) -> Tuple[float, float]:
    """Mean and variance of the frequency operator from the explicit tensor build."""
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    big = np.ones(1, dtype=complex)
    for _ in range(pvm.n_copies):
        big = np.kron(big, v)
    f = pvm.frequency_operator()
    mean = float(np.real(big.conj() @ f @ big))
    second = float(np.real(big.conj() @ f @ f @ big))
    return mean, second - mean * mean


def sequential_effect(projectors, ham, t: float, i: int, j: int) -> np.ndarray:
    """``K_ij = P_i e^{iHt} P_j e^{-iHt} P_i``."""
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    u = _unitary(ham, t)
    return ps[i] @ u.conj().T @ ps[j] @ u @ ps[i]


def sequential_frequency_povm_overlap(n_copies: int, effect, n: int, n_prime: int) -> float:
    """``||Pi_K(n/N) Pi_K(n'/N)||`` (spectral norm) for ``n != n'``."""
    if n == n_prime:
        raise ValueError("overlap is defined for distinct counts")
    ops = count_operators(n_copies, effect)
    return float(np.linalg.norm(ops[n] @ ops[n_prime], 2))


# ---------------------------------------------------------------------------
# conditional marginals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CondMarginal:
    standard: float
    hypothesis: float
    interference: float


def condmarg_distinction(rho, first, second, ham, t: float, u2: Sequence[int]) -> CondMarginal:
    """Second-measurement marginal with and without the first measurement.

    ``standard = sum_{j in U2} sum_i Tr(rho P_i Q_j P_i)`` and
    ``hypothesis = sum_{j in U2} Tr(rho Q_j)`` with ``Q_j`` the Heisenberg
    projector at ``t``.  ``interference`` is the off-diagonal sum
    ``sum_{i != i'} Tr(rho P_i Q_j P_i')``, equal to their difference.  For
    ``t = 0`` or a zero Hamiltonian no propagator is formed, so the values are
    exact for dyadic inputs.
    """
    r = _mat(rho)
    ps = [np.asarray(p, dtype=complex) for p in first]
    qs = [np.asarray(q, dtype=complex) for q in second]
    h = _mat(ham)
    if t != 0 and np.any(h != 0):
        u = _unitary(h, t)
        qs = [u.conj().T @ q @ u for q in qs]
    std = hyp = inter = 0.0
    for j in u2:
        hyp += float(np.real(np.trace(r @ qs[j])))
        for a, pa in enumerate(ps):
            for b, pb in enumerate(ps):
                val = float(np.real(np.trace(r @ pa @ qs[j] @ pb)))
                if a == b:
                    std += val
                else:
                    inter += val
    return CondMarginal(std, hyp, inter)
