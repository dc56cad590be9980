"""Histories, class operators and sequential-measurement POVMs.

Three kinds of slot effects are supported:

``sharp_grid(delta)``
    Sharp position projectors ``P_U``.  ``delta`` is the resolution used when a
    non-final slot is fine-grained into cells of width ``delta``.
``gaussian_sqrt(delta)``
    Unsharp position effects built from Gaussian densities of width ``delta``;
    sequential probabilities use the nested square-root construction.
``discrete_spectral(projectors)``
    Spectral projectors of a discrete observable; sets are index tuples.

Operators may be grid based (``LinearOperator`` / ``DensityOperator``) or plain
matrices for finite-dimensional toy systems, in which case ``dx = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .qcore import (
    DensityOperator,
    Grid,
    LinearOperator,
    SampleSet,
    SmearedIndicator,
    gaussian_kernel,
    indicator,
    propagator,
    smeared_chi,
    snap_to_grid,
    sqrt_psd,
)

IndexSet = Tuple[int, ...]
SlotSet = Union[SampleSet, IndexSet]


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistorySpec:
    """Time-ordered ``(t_k, U_k)`` pairs."""

    entries: Tuple[Tuple[float, SlotSet], ...]

    def __post_init__(self):
        ents = tuple((float(t), _norm_set(u)) for t, u in self.entries)
        if not ents:
            raise ValueError("a history needs at least one entry")
        times = [t for t, _ in ents]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("history times must be strictly increasing")
        for _, u in ents:
            if isinstance(u, SampleSet) and u.is_empty:
                raise ValueError("history sets must be nonempty")
            if isinstance(u, tuple) and len(u) == 0:
                raise ValueError("history sets must be nonempty")
        object.__setattr__(self, "entries", ents)

    @classmethod
    def of(cls, *pairs) -> "HistorySpec":
        return cls(tuple(pairs))

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(t for t, _ in self.entries)

    @property
    def sets(self) -> Tuple[SlotSet, ...]:
        return tuple(u for _, u in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def replace(self, slot: int, u: SlotSet) -> "HistorySpec":
        ents = list(self.entries)
        ents[slot] = (ents[slot][0], u)
        return HistorySpec(tuple(ents))

    def drop(self, slot: int) -> "HistorySpec":
        ents = list(self.entries)
        del ents[slot]
        return HistorySpec(tuple(ents))


def _norm_set(u):
    if isinstance(u, SampleSet):
        return u
    if isinstance(u, (list, tuple, set, frozenset, range)):
        return tuple(sorted(int(i) for i in u))
    raise TypeError(f"unsupported slot set {u!r}")


@dataclass(frozen=True, eq=False)
class PovmKind:
    variant: str
    delta: Optional[float] = None
    projectors: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in ("sharp_grid", "gaussian_sqrt", "discrete_spectral"):
            raise ValueError(f"unknown POVM kind {self.variant!r}")
        if self.variant != "discrete_spectral":
            if self.delta is None or not self.delta > 0:
                raise ValueError("delta must be positive")
        else:
            if not self.projectors:
                raise ValueError("discrete kind needs projectors")
            _check_exclusive(self.projectors)

    @classmethod
    def sharp_grid(cls, delta: float) -> "PovmKind":
        return cls("sharp_grid", float(delta))

    @classmethod
    def gaussian_sqrt(cls, delta: float) -> "PovmKind":
        return cls("gaussian_sqrt", float(delta))

    @classmethod
    def discrete_spectral(cls, projectors) -> "PovmKind":
        return cls("discrete_spectral", None, tuple(np.asarray(p, dtype=complex) for p in projectors))

    @property
    def projector_valued(self) -> bool:
        return self.variant != "gaussian_sqrt"


@dataclass(frozen=True, eq=False)
class EffectOperator:
    """Positive operator; ``density=True`` marks a POVM density (no upper bound)."""

    op: LinearOperator
    density: bool = False

    def __post_init__(self):
        m = self.op.matrix
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w.min() < -1e-9:
            raise ValueError("effect is not positive")
        if not self.density and w.max() > 1 + 1e-9:
            raise ValueError("effect exceeds the identity")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


@dataclass(frozen=True)
class DecoherenceValue:
    value: complex
    pair: Tuple[HistorySpec, HistorySpec]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _check_exclusive(projectors, tol: float = 1e-9):
    ps = [np.asarray(p) for p in projectors]
    d = ps[0].shape[0]
    if np.max(np.abs(sum(ps) - np.eye(d))) > tol:
        raise ValueError("projectors are not exhaustive")
    for i, p in enumerate(ps):
        if np.max(np.abs(p @ p - p)) > tol:
            raise ValueError("projector family contains a non-projector")
        for q in ps[i + 1:]:
            if np.max(np.abs(p @ q)) > tol:
                raise ValueError("projectors are not exclusive")


def _mat(obj) -> np.ndarray:
    if isinstance(obj, (LinearOperator, DensityOperator, EffectOperator)):
        return np.asarray(obj.matrix)
    return np.asarray(obj, dtype=complex)


def _weight(obj) -> float:
    return obj.grid.dx if hasattr(obj, "grid") else 1.0


def _grid_of(*objs) -> Optional[Grid]:
    grids = {o.grid for o in objs if hasattr(o, "grid")}
    if len(grids) > 1:
        raise ValueError("mismatched grids")
    return grids.pop() if grids else None


def _unitary(ham, t: float) -> np.ndarray:
    if isinstance(ham, LinearOperator):
        return propagator(ham, t)
    h = np.asarray(ham, dtype=complex)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


class _Evolver:
    """Caches propagators for repeated time steps."""

    def __init__(self, ham):
        self.ham = ham
        self._cache = {}

    def __call__(self, t: float) -> np.ndarray:
        key = round(float(t), 15)
        if key not in self._cache:
            self._cache[key] = _unitary(self.ham, t)
        return self._cache[key]


def slot_effect(u: SlotSet, kind: PovmKind, grid: Optional[Grid], dim: Optional[int] = None) -> np.ndarray:
    """Effect attached to one slot: ``P_U``, ``Pi^delta(U)`` or a spectral sum."""
    if kind.variant == "discrete_spectral":
        if not isinstance(u, tuple):
            raise ValueError("discrete kind expects index sets; mixed kinds are rejected")
        d = kind.projectors[0].shape[0]
        out = np.zeros((d, d), dtype=complex)
        for i in u:
            out = out + kind.projectors[i]
        return out
    if not isinstance(u, SampleSet):
        raise ValueError("position kinds expect SampleSet slots; mixed kinds are rejected")
    if grid is None:
        raise ValueError("position kinds need a grid")
    if kind.variant == "sharp_grid":
        return np.diag(indicator(u, grid)).astype(complex)
    return np.diag(smeared_chi(SmearedIndicator(u, kind.delta), grid.x)).astype(complex)


def _slot_factor(u: SlotSet, kind: PovmKind, grid, dim=None) -> np.ndarray:
    e = slot_effect(u, kind, grid, dim)
    if kind.variant == "gaussian_sqrt":
        return np.diag(np.sqrt(np.real(np.diagonal(e)))).astype(complex)
    return e


# ---------------------------------------------------------------------------
# class operators, probabilities, decoherence functional
# ---------------------------------------------------------------------------


def class_operator(h: HistorySpec, ham, kind: PovmKind, grid: Optional[Grid] = None) -> np.ndarray:
    """Time-ordered product ``U(t_n)^† A_n U(t_n) ... U(t_1)^† A_1 U(t_1)``.

    ``A_k`` is ``P_{U_k}`` for projector kinds and ``sqrt(Pi^delta(U_k))`` for
    the Gaussian kind.
    """
    grid = grid or _grid_of(ham)
    ev = _Evolver(ham)
    d = _mat(ham).shape[0]
    c = np.eye(d, dtype=complex)
    t_prev = 0.0
    # Schrodinger-ordered accumulation: C = U(t_n)^† A_n U(t_n - t_{n-1}) ... A_1 U(t_1)
    for t, u in h.entries:
        c = _slot_factor(u, kind, grid) @ ev(t - t_prev) @ c
        t_prev = t
    return ev(t_prev).conj().T @ c


def _rho_and_weight(rho):
    return _mat(rho), _weight(rho)


def history_probability(rho, h: HistorySpec, ham, kind: PovmKind) -> float:
    """``p(alpha) = Tr(C rho C^†)``."""
    r, w = _rho_and_weight(rho)
    c = class_operator(h, ham, kind, _grid_of(rho, ham))
    return float(np.real(np.trace(c @ r @ c.conj().T)) * w)


def decoherence_functional(rho, a: HistorySpec, b: HistorySpec, ham, kind: PovmKind) -> DecoherenceValue:
    """``d(a, b) = Tr(C_a rho C_b^†)``."""
    if a.times != b.times:
        raise ValueError("histories must share the same time grid")
    r, w = _rho_and_weight(rho)
    grid = _grid_of(rho, ham)
    ca = class_operator(a, ham, kind, grid)
    cb = class_operator(b, ham, kind, grid)
    return DecoherenceValue(complex(np.trace(ca @ r @ cb.conj().T) * w), (a, b))


def _join(a: HistorySpec, b: HistorySpec) -> Tuple[HistorySpec, int]:
    if a.times != b.times:
        raise ValueError("histories not joinable: different times")
    diff = [k for k, (u, v) in enumerate(zip(a.sets, b.sets)) if u != v]
    if len(diff) != 1:
        raise ValueError("histories not joinable: must differ in exactly one slot")
    k = diff[0]
    u, v = a.sets[k], b.sets[k]
    if isinstance(u, SampleSet):
        if not u.isdisjoint(v):
            raise ValueError("histories not joinable: overlapping sets")
        joined = u.union(v)
    else:
        if set(u) & set(v):
            raise ValueError("histories not joinable: overlapping sets")
        joined = tuple(sorted(set(u) | set(v)))
    return a.replace(k, joined), k


def additivity_defect(rho, a: HistorySpec, b: HistorySpec, ham, kind: PovmKind) -> float:
    """``p(a or b) - p(a) - p(b)``, checked against ``2 Re d(a, b)``."""
    if not kind.projector_valued:
        raise ValueError("additivity identity requires projector-valued slots")
    joined, _ = _join(a, b)
    defect = (history_probability(rho, joined, ham, kind)
              - history_probability(rho, a, ham, kind)
              - history_probability(rho, b, ham, kind))
    two_re_d = 2.0 * decoherence_functional(rho, a, b, ham, kind).value.real
    if abs(defect - two_re_d) > 1e-12 * max(1.0, _mat(rho).shape[0] / 64):
        raise ArithmeticError(f"additivity identity violated: {defect} vs {two_re_d}")
    return defect


# ---------------------------------------------------------------------------
# discrete two-time POVM
# ---------------------------------------------------------------------------


def discrete_two_time_povm(rho, i: int, j: int, ham, projectors, t: float) -> float:
    """Fine-grained ``p(i, 0; j, t) = Tr(Q_j P_i rho P_i)`` with ``Q_j = U^† P_j U``."""
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    _check_exclusive(ps)
    r = _mat(rho)
    u = _unitary(ham, t)
    q = u.conj().T @ ps[j] @ u
    return float(np.real(np.trace(q @ ps[i] @ r @ ps[i])))


# ---------------------------------------------------------------------------
# Gaussian square-root POVM
# ---------------------------------------------------------------------------


def gaussian_povm_element(grid: Grid, x_center: float, delta: float) -> EffectOperator:
    """POVM density ``Pi_x^delta``: multiplication by ``f_delta(x - x_center)``."""
    if delta < 2 * grid.dx:
        raise ValueError(f"delta={delta} under-resolved on grid with dx={grid.dx}")
    vals = gaussian_kernel(grid.x - x_center, delta)
    return EffectOperator(LinearOperator.diagonal(grid, vals, hermitian=True, positive=True), density=True)


def sqrt_sandwich(a: np.ndarray, u: SampleSet, grid: Grid, delta: float) -> np.ndarray:
    """``int_U dx sqrt(Pi_x) A sqrt(Pi_x)`` as a Hadamard product.

    For Gaussian densities the integral factorises into
    ``A_ij exp(-(x_i - x_j)^2 / (8 delta^2)) chi_U^delta((x_i + x_j) / 2)``.
    """
    x = grid.x
    diff = x[:, None] - x[None, :]
    mid = 0.5 * (x[:, None] + x[None, :])
    mask = np.exp(-diff**2 / (8.0 * delta**2)) * smeared_chi(SmearedIndicator(u, delta), mid)
    return a * mask


def _check_resolved(h: HistorySpec, grid: Grid, delta: float):
    if delta < 2 * grid.dx:
        raise ValueError(f"delta={delta} under-resolved on grid with dx={grid.dx}")
    for u in h.sets:
        if not isinstance(u, SampleSet):
            raise ValueError("Gaussian POVM needs position sample sets")
        for a, b in u.intervals:
            if b - a < delta:
                raise ValueError(f"interval [{a},{b}) narrower than delta={delta}")


def sqrt_povm_sequential(h: HistorySpec, ham: LinearOperator, delta: float) -> EffectOperator:
    """Nested square-root POVM ``R^delta(U_1, t_1; ...; U_n, t_n)`` (Heisenberg picture)."""
    grid = ham.grid
    _check_resolved(h, grid, delta)
    ev = _Evolver(ham)
    times, sets = h.times, h.sets
    n = grid.n_points
    r = sqrt_sandwich(np.eye(n, dtype=complex), sets[-1], grid, delta)
    for k in range(len(h) - 2, -1, -1):
        u = ev(times[k + 1] - times[k])
        r = sqrt_sandwich(u.conj().T @ r @ u, sets[k], grid, delta)
    u = ev(times[0])
    r = u.conj().T @ r @ u
    r = 0.5 * (r + r.conj().T)
    return EffectOperator(LinearOperator(grid, r, hermitian=True))


def sqrt_povm_probability(rho: DensityOperator, h: HistorySpec, ham: LinearOperator, delta: float) -> float:
    """``Tr(rho R^delta)`` evaluated in the Schrodinger picture."""
    grid = ham.grid
    _check_resolved(h, grid, delta)
    ev = _Evolver(ham)
    r = _mat(rho)
    t_prev = 0.0
    for t, u in h.entries[:-1]:
        v = ev(t - t_prev)
        r = sqrt_sandwich(v @ r @ v.conj().T, u, grid, delta)
        t_prev = t
    t, u = h.entries[-1]
    v = ev(t - t_prev)
    r = v @ r @ v.conj().T
    chi = smeared_chi(SmearedIndicator(u, delta), grid.x)
    return float(np.real(np.sum(np.diagonal(r) * chi)) * grid.dx)


# ---------------------------------------------------------------------------
# fine-grained (sharp cell) probabilities and interference terms
# ---------------------------------------------------------------------------


def cell_labels(u: SampleSet, grid: Grid, width: float, origin: float = 0.0) -> np.ndarray:
    """Label each grid point by the width-``width`` cell of ``u`` it falls in (-1 outside)."""
    x = grid.x
    lab = np.floor((x - origin) / width).astype(np.int64)
    inside = u.contains(x)
    lab = np.where(inside, lab - lab.min(), -1)
    return lab


def _pinch(r: np.ndarray, labels: np.ndarray) -> np.ndarray:
    same = (labels[:, None] == labels[None, :]) & (labels[:, None] >= 0)
    return np.where(same, r, 0.0)


def fine_grained_probability(rho: DensityOperator, h: HistorySpec, ham: LinearOperator, delta: float) -> float:
    """``p_delta``: non-final slots resolved into sharp cells of width ``delta``.

    ``sum_{cells} Tr(C_cells rho C_cells^†)`` with the final slot kept coarse.
    """
    grid = ham.grid
    ev = _Evolver(ham)
    r = _mat(rho)
    t_prev = 0.0
    for t, u in h.entries[:-1]:
        v = ev(t - t_prev)
        r = _pinch(v @ r @ v.conj().T, cell_labels(u, grid, delta))
        t_prev = t
    t, u = h.entries[-1]
    v = ev(t - t_prev)
    r = v @ r @ v.conj().T
    return float(np.real(np.sum(np.diagonal(r) * indicator(u, grid))) * grid.dx)


def sequential_probability(rho, h: HistorySpec, ham, kind: PovmKind) -> float:
    """Resolution-dependent sequential probability ``p_delta`` for any kind.

    Sharp kind: fine-grained cells; Gaussian kind: nested square-root POVM;
    discrete kind: the fine-grained spectral sum.
    """
    if kind.variant == "sharp_grid":
        return fine_grained_probability(rho, h, ham, kind.delta)
    if kind.variant == "gaussian_sqrt":
        return sqrt_povm_probability(rho, h, ham, kind.delta)
    r = _mat(rho)
    ev = _Evolver(ham)
    t_prev = 0.0
    for t, u in h.entries[:-1]:
        v = ev(t - t_prev)
        r = v @ r @ v.conj().T
        r = sum(kind.projectors[i] @ r @ kind.projectors[i] for i in u)
        t_prev = t
    t, u = h.entries[-1]
    v = ev(t - t_prev)
    r = v @ r @ v.conj().T
    return float(np.real(np.trace(slot_effect(u, kind, None) @ r)))


def interference_term(rho: DensityOperator, x1: float, delta: float, u2, t1: float, t2: float,
                      ham: LinearOperator) -> complex:
    """Decoherence functional between adjacent cells ``[x1, x1+delta)`` and ``[x1-delta, x1)``.

    ``u2`` is a ``SampleSet`` (returns a probability-like number) or a point
    ``x2`` (returns the corresponding density at the grid point nearest to it).
    ``2 Re`` of the result equals ``p(merged) - p(right) - p(left)``.
    """
    grid = ham.grid
    ev = _Evolver(ham)
    v1 = ev(t1)
    r = v1 @ _mat(rho) @ v1.conj().T
    pa = indicator(SampleSet.interval(x1, x1 + delta), grid)
    pb = indicator(SampleSet.interval(x1 - delta, x1), grid)
    v2 = ev(t2 - t1)
    m = v2 @ ((pa[:, None] * r) * pb[None, :]) @ v2.conj().T
    if isinstance(u2, SampleSet):
        return complex(np.sum(np.diagonal(m) * indicator(u2, grid)) * grid.dx)
    i = int(np.argmin(np.abs(grid.x - float(u2))))
    return complex(m[i, i])


@dataclass(frozen=True)
class InterferenceSum:
    p_delta: float
    p_2delta: float
    interference: float
    identity_residual: float


def interference_sum(rho: DensityOperator, u1: SampleSet, u2: SampleSet, t1: float, t2: float,
                     ham: LinearOperator, delta: float) -> InterferenceSum:
    """``p_{2 delta} - p_delta`` as a sum of interference terms over merged cells.

    Every width-``2 delta`` cell is split into two width-``delta`` cells; the
    interference sum ``sum 2 Re d(left, right)`` must equal the difference of
    the two fine-grained probabilities.
    """
    grid = ham.grid
    h = HistorySpec.of((t1, u1), (t2, u2))
    p_d = fine_grained_probability(rho, h, ham, delta)
    p_2d = fine_grained_probability(rho, h, ham, 2 * delta)
    ev = _Evolver(ham)
    v1 = ev(t1)
    r = v1 @ _mat(rho) @ v1.conj().T
    fine = cell_labels(u1, grid, delta)
    coarse = cell_labels(u1, grid, 2 * delta)
    # keep only pairs in the same coarse cell but different fine cells, one ordering
    same_coarse = (coarse[:, None] == coarse[None, :]) & (coarse[:, None] >= 0)
    fine_abs = np.floor(grid.x / delta).astype(np.int64)
    cross = same_coarse & (fine_abs[:, None] > fine_abs[None, :])
    v2 = ev(t2 - t1)
    m = v2 @ np.where(cross, r, 0.0) @ v2.conj().T
    d_sum = complex(np.sum(np.diagonal(m) * indicator(u2, grid)) * grid.dx)
    eps = 2.0 * d_sum.real
    return InterferenceSum(p_d, p_2d, eps, (p_2d - p_d) - eps)


# ---------------------------------------------------------------------------
# compatibility and no-go witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompatibilityResult:
    lhs: float
    rhs: float
    defect: float


def compatibility_check(rho, h: HistorySpec, slot: int, ham, delta: float,
                        kind: Optional[PovmKind] = None) -> CompatibilityResult:
    """Marginalise slot ``slot`` (set it to the full line) and compare with the
    ``(n-1)``-time probability of the history with that slot removed.

    The default kind is the Gaussian square-root POVM of width ``delta``.
    """
    if len(h) < 2:
        raise ValueError("compatibility needs at least two entries")
    kind = kind or PovmKind.gaussian_sqrt(delta)
    full = SampleSet.omega() if kind.variant != "discrete_spectral" else tuple(range(len(kind.projectors)))
    lhs = sequential_probability(rho, h.replace(slot, full), ham, kind)
    rhs = sequential_probability(rho, h.drop(slot), ham, kind)
    return CompatibilityResult(lhs, rhs, abs(lhs - rhs))


@dataclass(frozen=True)
class NoGoReport:
    commutator_norm: float
    marginal_nonidempotency: float
    inputs: dict
    thresholds: dict

    @property
    def passed(self) -> dict:
        return {
            "commutator": self.commutator_norm > self.thresholds["commutator"],
            "marginal": self.marginal_nonidempotency > self.thresholds["marginal"],
        }

    def to_dict(self) -> dict:
        return {
            "commutator_norm": self.commutator_norm,
            "marginal_nonidempotency": self.marginal_nonidempotency,
            "inputs": self.inputs,
            "thresholds": self.thresholds,
            "passed": self.passed,
        }


def heisenberg_projector(u: SampleSet, ham: LinearOperator, t: float) -> np.ndarray:
    v = propagator(ham, t)
    return v.conj().T @ np.diag(indicator(u, ham.grid)).astype(complex) @ v


def nogo_witness(ham: LinearOperator, delta: float, u1: SampleSet, u2: SampleSet,
                 t1: float = 0.0, t2: float = 1.0, thresholds: Optional[dict] = None) -> NoGoReport:
    """Concrete obstructions to a joint two-time POVM.

    (i) ``||[P_H(t1)(U1), P_H(t2)(U2)]||``; (ii) non-idempotency
    ``||M - M^2||`` of the first-slot marginal ``M = sum_c P_c Q(U2) P_c`` of
    the fine-grained (cell width ``delta``) two-time POVM, with ``Q(U2)`` the
    Heisenberg projector relative to ``t1``.
    """
    grid = ham.grid
    p1 = heisenberg_projector(u1, ham, t1)
    p2 = heisenberg_projector(u2, ham, t2)
    comm = float(np.linalg.norm(p1 @ p2 - p2 @ p1, 2))
    q = heisenberg_projector(u2, ham, t2 - t1)
    lab = cell_labels(SampleSet.omega(), grid, delta)
    m = _pinch(q, lab)
    nonid = float(np.linalg.norm(m - m @ m, 2))
    return NoGoReport(
        comm,
        nonid,
        {"delta": delta, "U1": str(u1), "U2": str(u2), "t1": t1, "t2": t2, "n_points": grid.n_points},
        thresholds or {"commutator": 0.1, "marginal": 0.01},
    )


def complement_histories(h: HistorySpec, kind: PovmKind) -> List[HistorySpec]:
    """The ``2^n - 1`` disjoint slot-complement products forming ``not alpha``."""
    out = []
    n = len(h)
    for mask in product((0, 1), repeat=n):
        if not any(mask):
            continue
        ents = []
        empty = False
        for (t, u), flip in zip(h.entries, mask):
            if flip:
                if isinstance(u, SampleSet):
                    c = u.complement()
                    empty = empty or c.is_empty
                else:
                    c = tuple(i for i in range(len(kind.projectors)) if i not in u)
                    empty = empty or len(c) == 0
                ents.append((t, c))
            else:
                ents.append((t, u))
        if not empty:
            out.append(HistorySpec(tuple(ents)))
    return out
