"""Discretized one-dimensional Hilbert space.

Positions live on a periodic, cell-centred grid ``x_i = x_min + (i + 1/2) dx``.
Wave functions are stored as amplitudes normalised so that
``sum |psi_i|^2 dx = 1``.  Operators act on amplitude vectors, so the identity
is the identity matrix and an integral kernel ``K(x, x')`` is represented by
the matrix ``K(x_i, x_j) dx``.  A density operator is stored through its kernel
values ``rho(x_i, x_j)``; consequently ``trace(rho) dx = 1`` and
``Tr(rho E) = dx * trace(rho @ E)``.

Natural units with hbar = 1 are used throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtr

HERMITIAN_TOL = 1e-9
EDGE_MASS_TOL = 1e-6
SQRT_CLAMP = 1e-12


class IncompatibleOutcome(ValueError):
    """Raised when an outcome has (numerically) vanishing probability."""


class EdgeMassWarning(UserWarning):
    """A state has non-negligible weight near the periodic boundary."""


# ---------------------------------------------------------------------------
# grid and sample sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Periodic, cell-centred position grid.

    Parameters
    ----------
    n_points : int
        Number of cells, at least 8.
    x_min, x_max : float
        Extent of the periodic box.
    """

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError(f"grid needs at least 8 points, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_points) + 0.5) * self.dx

    @property
    def k(self) -> np.ndarray:
        """Angular wave numbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    def to_dict(self) -> dict:
        return {"n_points": self.n_points, "x_min": self.x_min, "x_max": self.x_max}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["n_points"]), float(d["x_min"]), float(d["x_max"]))

    @classmethod
    def centered(cls, n_points: int, half_width: float) -> "Grid":
        return cls(n_points, -half_width, half_width)


Interval = Tuple[float, float]


@dataclass(frozen=True)
class SampleSet:
    """Finite union of disjoint half-open intervals ``[a, b)``.

    Endpoints may be infinite.  ``full=True`` marks the whole line; an empty
    interval tuple is the empty set.
    """

    intervals: Tuple[Interval, ...] = ()
    full: bool = False

    def __post_init__(self):
        if self.full:
            object.__setattr__(self, "intervals", ((-math.inf, math.inf),))
            return
        ivs = []
        for a, b in self.intervals:
            a, b = float(a), float(b)
            if math.isnan(a) or math.isnan(b):
                raise ValueError("interval endpoints must not be NaN")
            if b > a:
                ivs.append((a, b))
        ivs.sort()
        merged: list = []
        for a, b in ivs:
            if merged and a < merged[-1][1]:
                raise ValueError(f"intervals overlap: {merged[-1]} and {(a, b)}")
            if merged and a == merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        if len(merged) == 1 and merged[0] == (-math.inf, math.inf):
            object.__setattr__(self, "full", True)
        object.__setattr__(self, "intervals", tuple(merged))

    # constructors -----------------------------------------------------
    @classmethod
    def omega(cls) -> "SampleSet":
        return cls(full=True)

    @classmethod
    def empty(cls) -> "SampleSet":
        return cls(())

    @classmethod
    def interval(cls, a: float, b: float) -> "SampleSet":
        return cls(((a, b),))

    @classmethod
    def right_half(cls, a: float = 0.0) -> "SampleSet":
        return cls(((a, math.inf),))

    @classmethod
    def left_half(cls, b: float = 0.0) -> "SampleSet":
        return cls(((-math.inf, b),))

    # queries ----------------------------------------------------------
    @property
    def is_empty(self) -> bool:
        return not self.full and len(self.intervals) == 0

    @property
    def is_bounded(self) -> bool:
        return all(math.isfinite(a) and math.isfinite(b) for a, b in self.intervals)

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a) & (x < b)
        return out

    def complement(self) -> "SampleSet":
        if self.full:
            return SampleSet.empty()
        pts = [-math.inf]
        for a, b in self.intervals:
            pts.extend([a, b])
        pts.append(math.inf)
        return SampleSet(tuple((pts[i], pts[i + 1]) for i in range(0, len(pts), 2)))

    def union(self, other: "SampleSet") -> "SampleSet":
        """Union of two disjoint sets (overlap raises)."""
        if self.full or other.full:
            if not (self.is_empty or other.is_empty):
                raise ValueError("union with the full line of a nonempty set overlaps")
            return SampleSet.omega()
        return SampleSet(self.intervals + other.intervals)

    def intersect(self, other: "SampleSet") -> "SampleSet":
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if hi > lo:
                    out.append((lo, hi))
        return SampleSet(tuple(out))

    def isdisjoint(self, other: "SampleSet") -> bool:
        return self.intersect(other).is_empty

    def clip(self, lo: float, hi: float) -> "SampleSet":
        return self.intersect(SampleSet.interval(lo, hi))

    def scaled(self, factor: float) -> "SampleSet":
        """Image of the set under ``x -> factor * x``."""
        if factor == 0:
            raise ValueError("scale factor must be nonzero")
        ivs = []
        for a, b in self.intervals:
            lo, hi = sorted((a * factor, b * factor))
            ivs.append((lo, hi))
        return SampleSet(tuple(ivs))

    def shifted(self, s: float) -> "SampleSet":
        return SampleSet(tuple((a + s, b + s) for a, b in self.intervals), full=self.full)

    def to_json(self):
        if self.full:
            return "omega"
        return [[_enc(a), _enc(b)] for a, b in self.intervals]

    @classmethod
    def from_json(cls, obj) -> "SampleSet":
        if obj == "omega":
            return cls.omega()
        return cls(tuple((_dec(a), _dec(b)) for a, b in obj))

    def __str__(self) -> str:
        if self.full:
            return "Omega"
        if self.is_empty:
            return "{}"
        return " u ".join(f"[{a:g},{b:g})" for a, b in self.intervals)


def _enc(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec(v) -> float:
    return float(v)


def snap_to_grid(u: SampleSet, grid: Grid) -> Tuple[SampleSet, float]:
    """Snap finite endpoints to the nearest cell boundaries.

    Returns the snapped set and the largest endpoint displacement, which is at
    most ``dx / 2``.
    """
    if u.full:
        return u, 0.0
    dx, x0 = grid.dx, grid.x_min
    worst = 0.0
    ivs = []
    for a, b in u.intervals:
        pair = []
        for e in (a, b):
            if math.isfinite(e):
                s = x0 + round((e - x0) / dx) * dx
                worst = max(worst, abs(s - e))
                pair.append(s)
            else:
                pair.append(e)
        ivs.append(tuple(pair))
    return SampleSet(tuple(ivs)), worst


def indicator(u: SampleSet, grid: Grid) -> np.ndarray:
    """Sharp indicator of ``u`` at the cell centres, as floats."""
    return u.contains(grid.x).astype(float)


# ---------------------------------------------------------------------------
# states and operators
# ---------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Amplitudes on a grid, ``sum |psi|^2 dx = 1`` after ``normalize``."""

    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise ValueError("amplitude vector does not match grid")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx))

    def normalize(self) -> "WaveFunction":
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalise the zero vector")
        return WaveFunction(self.grid, self.amplitudes / nrm)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def edge_mass(self, fraction: float = 0.05) -> float:
        m = max(1, int(round(fraction * self.grid.n_points)))
        rho = self.density() * self.grid.dx
        return float(rho[:m].sum() + rho[-m:].sum())

    def check_edges(self, fraction: float = 0.05) -> float:
        mass = self.edge_mass(fraction)
        if mass > EDGE_MASS_TOL:
            warnings.warn(f"edge mass {mass:.2e} exceeds {EDGE_MASS_TOL:g}", EdgeMassWarning, stacklevel=2)
        return mass

    def to_dict(self) -> dict:
        inter = np.empty(2 * self.grid.n_points)
        inter[0::2] = self.amplitudes.real
        inter[1::2] = self.amplitudes.imag
        return {"grid": self.grid.to_dict(), "amplitudes": inter.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "WaveFunction":
        grid = Grid.from_dict(d["grid"])
        inter = np.asarray(d["amplitudes"], dtype=float)
        return cls(grid, inter[0::2] + 1j * inter[1::2])

    # common states ------------------------------------------------------
    @classmethod
    def gaussian(cls, grid: Grid, center: float = 0.0, sigma: float = 1.0, k0: float = 0.0) -> "WaveFunction":
        """Gaussian packet whose probability density has standard deviation ``sigma``."""
        x = grid.x
        amp = np.exp(-((x - center) ** 2) / (4.0 * sigma**2) + 1j * k0 * x)
        return cls(grid, amp).normalize()

    @classmethod
    def box(cls, grid: Grid, half_width: float, center: float = 0.0) -> "WaveFunction":
        """Normalised indicator of ``[center - half_width, center + half_width)``."""
        ind = SampleSet.interval(center - half_width, center + half_width).contains(grid.x)
        return cls(grid, ind.astype(complex)).normalize()

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "WaveFunction":
        return cls(grid, np.asarray(fn(grid.x), dtype=complex)).normalize()


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density operator stored through its kernel ``rho(x_i, x_j)``."""

    grid: Grid
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.grid.n_points
        if m.shape != (n, n):
            raise ValueError("density matrix does not match grid")
        object.__setattr__(self, "matrix", _frozen(m))
        if self.validate:
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
                raise ValueError("density operator is not Hermitian")
            tr = float(np.trace(m).real) * self.grid.dx
            if abs(tr - 1.0) > 1e-8:
                raise ValueError(f"trace*dx = {tr} differs from 1")
            if np.linalg.eigvalsh(m).min() < -1e-10 * scale:
                raise ValueError("density operator has negative eigenvalues")

    @classmethod
    def from_wavefunction(cls, psi: WaveFunction) -> "DensityOperator":
        a = psi.amplitudes
        return cls(psi.grid, np.outer(a, a.conj()))

    @classmethod
    def mixture(cls, states: Sequence[WaveFunction], weights: Sequence[float]) -> "DensityOperator":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("weights must be a probability vector")
        grid = states[0].grid
        m = sum(wi * np.outer(s.amplitudes, s.amplitudes.conj()) for wi, s in zip(w, states))
        return cls(grid, m)

    def position_density(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def expectation(self, op: Union["LinearOperator", np.ndarray]) -> complex:
        e = op.matrix if isinstance(op, LinearOperator) else np.asarray(op)
        return complex(np.sum(self.matrix * e.T) * self.grid.dx)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense operator on the amplitude space of a grid.

    ``hermitian``, ``unitary`` and ``positive`` are claims that are verified on
    construction (tolerance 1e-9).  ``spectral`` optionally carries an
    eigendecomposition ``(eigenvalues, eigenvectors)`` of a Hermitian operator,
    and ``free_mass`` marks the free kinetic operator so that evolution can use
    FFTs.
    """

    grid: Grid
    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False
    positive: bool = False
    spectral: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)
    free_mass: Optional[float] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.grid.n_points
        if m.shape != (n, n):
            raise ValueError("operator matrix does not match grid")
        object.__setattr__(self, "matrix", _frozen(m))
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if self.hermitian or self.positive:
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
                raise ValueError("operator flagged Hermitian is not")
        if self.unitary:
            if np.max(np.abs(m @ m.conj().T - np.eye(n))) > HERMITIAN_TOL:
                raise ValueError("operator flagged unitary is not")
        if self.positive:
            if np.linalg.eigvalsh(m).min() < -HERMITIAN_TOL * scale:
                raise ValueError("operator flagged positive is not")

    @classmethod
    def identity(cls, grid: Grid) -> "LinearOperator":
        return cls(grid, np.eye(grid.n_points), hermitian=True, unitary=True, positive=True)

    @classmethod
    def diagonal(cls, grid: Grid, values, **flags) -> "LinearOperator":
        return cls(grid, np.diag(np.asarray(values, dtype=complex)), **flags)

    @classmethod
    def position(cls, grid: Grid) -> "LinearOperator":
        return cls(grid, np.diag(grid.x.astype(complex)), hermitian=True)

    def eig(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.spectral is not None:
            return self.spectral
        if not self.hermitian:
            raise ValueError("eigendecomposition requires a Hermitian operator")
        w, v = np.linalg.eigh(self.matrix)
        object.__setattr__(self, "spectral", (w, v))
        return w, v

    def commutator_norm(self, other: "LinearOperator") -> float:
        c = self.matrix @ other.matrix - other.matrix @ self.matrix
        return float(np.linalg.norm(c, 2))


SampleSetLike = Union[SampleSet, Iterable[Interval]]


@dataclass(frozen=True)
class SmearedIndicator:
    """Gaussian-smeared characteristic function of a sample set."""

    set: SampleSet
    delta: float
    kind: str = "gaussian"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.kind != "gaussian":
            raise ValueError(f"unsupported smearing kind {self.kind!r}")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def unitary_dft(n: int) -> np.ndarray:
    """Unitary DFT matrix ``F`` with ``F @ v == fft(v) / sqrt(n)``."""
    return np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)


def free_hamiltonian(grid: Grid, mass: float) -> LinearOperator:
    """Kinetic operator ``p^2 / 2m`` diagonalised by the discrete Fourier modes."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    if grid.n_points < 8:
        raise ValueError("grid too small")
    energies = grid.k**2 / (2.0 * mass)
    f = unitary_dft(grid.n_points)
    v = f.conj().T  # columns are plane waves
    h = (v * energies) @ v.conj().T
    h = 0.5 * (h + h.conj().T)
    return LinearOperator(grid, h, hermitian=True, spectral=(energies, v), free_mass=float(mass))


def potential_hamiltonian(grid: Grid, potential) -> LinearOperator:
    """Multiplication operator ``V(x)``; commutes with position."""
    v = np.asarray(potential(grid.x) if callable(potential) else potential, dtype=float)
    return LinearOperator(grid, np.diag(v.astype(complex)), hermitian=True,
                          spectral=(v, np.eye(grid.n_points, dtype=complex)))


def propagator(h: LinearOperator, t: float) -> np.ndarray:
    """Matrix of ``exp(-i H t)``."""
    if not h.hermitian:
        raise ValueError("evolution requires a Hermitian generator")
    if t == 0:
        return np.eye(h.grid.n_points, dtype=complex)
    w, v = h.eig()
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def apply_propagator(h: LinearOperator, t: float, vecs: np.ndarray) -> np.ndarray:
    """Apply ``exp(-i H t)`` to vectors stored along the last axis."""
    if not h.hermitian:
        raise ValueError("evolution requires a Hermitian generator")
    if t == 0:
        return np.array(vecs, dtype=complex, copy=True)
    if h.free_mass is not None:
        phase = np.exp(-1j * h.grid.k**2 / (2.0 * h.free_mass) * t)
        return np.fft.ifft(np.fft.fft(vecs, axis=-1) * phase, axis=-1)
    w, v = h.eig()
    coeff = np.asarray(vecs) @ v.conj()
    return (coeff * np.exp(-1j * w * t)) @ v.T


def evolve(state, h: LinearOperator, t: float):
    """Apply ``exp(-i H t)`` to a wave function or conjugate a density operator."""
    if not h.hermitian:
        raise ValueError("evolution requires a Hermitian generator")
    if state.grid != h.grid:
        raise ValueError("state and Hamiltonian live on different grids")
    if isinstance(state, WaveFunction):
        return WaveFunction(state.grid, apply_propagator(h, t, state.amplitudes))
    if isinstance(state, DensityOperator):
        u = propagator(h, t)
        m = u @ state.matrix @ u.conj().T
        return DensityOperator(state.grid, 0.5 * (m + m.conj().T), validate=False)
    raise TypeError(f"cannot evolve {type(state).__name__}")


def sqrt_psd(m: np.ndarray, clamp: float = SQRT_CLAMP) -> np.ndarray:
    """Positive square root of a Hermitian positive semidefinite matrix."""
    m = np.asarray(m)
    if np.count_nonzero(m - np.diag(np.diagonal(m))) == 0:
        d = np.real(np.diagonal(m)).copy()
        d[d < clamp] = 0.0
        return np.diag(np.sqrt(d)).astype(m.dtype)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w < clamp, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def _is_projector(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m @ m - m)) < tol)


def luders_reduce(rho: DensityOperator, e: LinearOperator) -> Tuple[DensityOperator, float]:
    """Lüders update for an effect ``0 <= E <= 1``.

    Returns ``(sqrt(E) rho sqrt(E) / p, p)`` with ``p = Tr(rho E)``.
    """
    if rho.grid != e.grid:
        raise ValueError("state and effect live on different grids")
    m = np.asarray(e.matrix)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise ValueError("effect is not Hermitian")
    w = np.linalg.eigvalsh(m)
    if w.min() < -HERMITIAN_TOL or w.max() > 1 + HERMITIAN_TOL:
        raise ValueError("effect must satisfy 0 <= E <= 1")
    prob = float(rho.expectation(m).real)
    if prob < 1e-14:
        raise IncompatibleOutcome(f"outcome probability {prob:.3e} vanishes")
    root = m if _is_projector(m) else sqrt_psd(m)
    new = root @ rho.matrix @ root.conj().T / prob
    return DensityOperator(rho.grid, 0.5 * (new + new.conj().T), validate=False), prob


def smeared_chi(ind: SmearedIndicator, x) -> np.ndarray:
    """Gaussian-smeared indicator ``chi_U^delta(x) = int_U f_delta(x - y) dy``."""
    x = np.asarray(x, dtype=float)
    if ind.set.full:
        return np.ones_like(x)
    out = np.zeros_like(x)
    d = ind.delta
    for a, b in ind.set.intervals:
        out += ndtr((x - a) / d) - ndtr((x - b) / d)
    return np.clip(out, 0.0, 1.0)


def gaussian_kernel(x, delta: float) -> np.ndarray:
    """Unit-normalised Gaussian ``f_delta``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x / delta) ** 2) / (math.sqrt(2.0 * math.pi) * delta)


@dataclass(frozen=True)
class SmearingReport:
    error: float
    bound: float
    p_u: float
    length: float
    c_measured: float


def smearing_relative_error(ind: SmearedIndicator, rho: DensityOperator, c_prime: float = 1.0) -> SmearingReport:
    """Weighted smearing error ``int rho(x) |chi_U - chi_U^delta| dx``.

    The returned bound is ``c_prime * (delta / L) * p(U)`` with ``L`` the total
    length of ``U``; ``c_measured`` is the constant that would make the bound
    tight.
    """
    if ind.set.is_empty:
        raise ValueError("sample set is empty")
    grid = rho.grid
    dens = rho.position_density()
    sharp = indicator(ind.set, grid)
    err = float(np.sum(dens * np.abs(sharp - smeared_chi(ind, grid.x))) * grid.dx)
    p_u = float(np.sum(dens * sharp) * grid.dx)
    length = ind.set.measure
    ratio = ind.delta / length
    bound = c_prime * ratio * p_u
    c_meas = err / (ratio * p_u) if (ratio > 0 and p_u > 0) else math.nan
    return SmearingReport(err, bound, p_u, length, c_meas)
