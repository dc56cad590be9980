"""Classical comparators: Markov path measures, Bohmian trajectories and local
hidden-variable models of two-time position measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import solve_ivp
from scipy.special import ndtri

from .qcore import Grid, LinearOperator, SampleSet, SmearedIndicator, WaveFunction, indicator, smeared_chi
from .rng import block_generator
from .seqmeas import HistorySpec

NODE_FLOOR = 1e-10


class NearNode(ArithmeticError):
    """Velocity requested too close to a node of the wave function."""


# ---------------------------------------------------------------------------
# Markov path measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Transition density ``g(x, x')`` on a grid; columns integrate to one."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.grid.n_points,) * 2:
            raise ValueError("kernel does not match grid")
        if np.any(m < 0):
            raise ValueError("kernel has negative entries")
        cols = m.sum(axis=0) * self.grid.dx
        if np.max(np.abs(cols - 1.0)) > 1e-9:
            raise ValueError("kernel columns are not normalised")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def positive(self) -> bool:
        return True

    def compose(self, later: "MarkovKernel") -> "MarkovKernel":
        """Kernel of ``self`` followed by ``later``."""
        return MarkovKernel(self.grid, later.matrix @ self.matrix * self.grid.dx)


def _normalise_columns(m: np.ndarray, dx: float) -> np.ndarray:
    return m / (m.sum(axis=0, keepdims=True) * dx)


def heat_kernel(grid: Grid, diffusion: float, t: float, images: int = 2) -> MarkovKernel:
    """Periodic Gaussian kernel of variance ``2 D t``."""
    if not (diffusion > 0 and t > 0):
        raise ValueError("diffusion constant and time must be positive")
    x = grid.x
    var = 2.0 * diffusion * t
    d = x[:, None] - x[None, :]
    m = np.zeros_like(d)
    for n in range(-images, images + 1):
        m += np.exp(-((d + n * grid.length) ** 2) / (2 * var))
    return MarkovKernel(grid, _normalise_columns(m, grid.dx))


def identity_kernel(grid: Grid) -> MarkovKernel:
    return MarkovKernel(grid, np.eye(grid.n_points) / grid.dx)


def reflection_kernel(grid: Grid, p_flip: float = 0.5) -> MarkovKernel:
    """Random sign flip ``x -> -x`` with probability ``p_flip`` (grid must be symmetric)."""
    if not np.allclose(grid.x, -grid.x[::-1]):
        raise ValueError("reflection needs a grid symmetric about zero")
    n = grid.n_points
    m = ((1 - p_flip) * np.eye(n) + p_flip * np.eye(n)[::-1]) / grid.dx
    return MarkovKernel(grid, m)


def markov_path_probability(rho0, kernels: Sequence[MarkovKernel], sets: Sequence[SampleSet]) -> float:
    """Probability that the chain visits ``U_1, ..., U_n`` at successive steps.

    ``rho0`` is a density vector on the grid (or a ``DensityOperator``); kernel
    ``k`` propagates from step ``k-1`` to step ``k``.
    """
    if len(kernels) != len(sets):
        raise ValueError("need one kernel per sample set")
    grid = kernels[0].grid
    v = np.asarray(rho0.position_density() if hasattr(rho0, "position_density") else rho0, dtype=float)
    for k, u in zip(kernels, sets):
        if k.grid != grid:
            raise ValueError("kernels on different grids")
        v = (k.matrix @ v) * grid.dx
        v = v * indicator(u, grid)
    return float(v.sum() * grid.dx)


def simulate_random_walk(x0: np.ndarray, diffusion: float, steps: Sequence[float], rng: np.random.Generator,
                         flips: Optional[Sequence[bool]] = None) -> np.ndarray:
    """Positions of Brownian walkers after successive time steps.

    ``flips[k]`` applies a fair random reflection at the end of step ``k``.
    Returns an array of shape ``(len(steps), len(x0))``.
    """
    x = np.array(x0, dtype=float)
    out = []
    for k, dt in enumerate(steps):
        x = x + math.sqrt(2 * diffusion * dt) * rng.standard_normal(x.shape)
        if flips is not None and flips[k]:
            x = np.where(rng.random(x.shape) < 0.5, -x, x)
        out.append(x.copy())
    return np.array(out)


# ---------------------------------------------------------------------------
# Bohmian mechanics
# ---------------------------------------------------------------------------


def _fd4(psi: np.ndarray, dx: float) -> np.ndarray:
    # fourth-order centred derivative on the periodic grid
    return (-np.roll(psi, -2, axis=-1) + 8 * np.roll(psi, -1, axis=-1)
            - 8 * np.roll(psi, 1, axis=-1) + np.roll(psi, 2, axis=-1)) / (12.0 * dx)


def velocity_field(amplitudes: np.ndarray, dx: float, mass: float) -> np.ndarray:
    """``(1/m) Im(psi'/psi)`` at the grid points (NaN where ``|psi|`` is below the floor)."""
    d = _fd4(amplitudes, dx)
    dens = np.abs(amplitudes) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.imag(np.conj(amplitudes) * d) / (mass * dens)
    return np.where(np.sqrt(dens) > NODE_FLOOR, v, np.nan)


def _periodic_interp(grid: Grid, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    xp = np.concatenate([[grid.x[-1] - grid.length], grid.x, [grid.x[0] + grid.length]])
    fp = np.concatenate([[values[-1]], values, [values[0]]])
    xw = grid.x_min + np.mod(np.asarray(x, dtype=float) - grid.x_min, grid.length)
    return np.interp(xw, xp, fp)


def bohm_velocity(psi: WaveFunction, x, mass: float):
    """Guidance velocity ``v = (1/m) Im(d_x psi / psi)`` at ``x``.

    Fourth-order centred differences on the grid, linear interpolation off
    grid.  Raises ``NearNode`` if ``|psi(x)|`` falls below 1e-10.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    grid = psi.grid
    amp = np.asarray(psi.amplitudes)
    xa = np.asarray(x, dtype=float)
    mod = _periodic_interp(grid, np.abs(amp), xa)
    if np.any(mod < NODE_FLOOR):
        raise NearNode("position too close to a node")
    d = _fd4(amp, grid.dx)
    v = np.imag(np.conj(amp) * d) / (mass * np.abs(amp) ** 2 + 1e-300)
    out = _periodic_interp(grid, v, xa)
    return float(out) if xa.ndim == 0 else out


class _Evolution:
    """``psi(t)`` for arbitrary ``t`` via the spectral decomposition of ``H``."""

    def __init__(self, psi0: WaveFunction, ham: LinearOperator):
        self.grid = psi0.grid
        self.free_mass = ham.free_mass
        if ham.free_mass is not None:
            self.coeff = np.fft.fft(psi0.amplitudes)
            self.energy = self.grid.k**2 / (2 * ham.free_mass)
            self.vecs = None
        else:
            w, v = ham.eig()
            self.coeff = v.conj().T @ psi0.amplitudes
            self.energy = w
            self.vecs = v

    def __call__(self, t: float) -> np.ndarray:
        c = self.coeff * np.exp(-1j * self.energy * t)
        if self.vecs is None:
            return np.fft.ifft(c)
        return self.vecs @ c


@dataclass
class BohmEnsemble:
    psi0: WaveFunction
    mass: float
    times: np.ndarray
    initial_points: np.ndarray
    trajectories: np.ndarray  # shape (len(times), n_kept)
    discarded: int = 0
    seed: int = 0

    @property
    def n(self) -> int:
        return self.trajectories.shape[1]

    def positions_at(self, t: float) -> np.ndarray:
        i = np.where(np.isclose(self.times, t, rtol=0, atol=1e-12))[0]
        if len(i) == 0:
            raise ValueError(f"time {t} not among trajectory times")
        return self.trajectories[i[0]]

    def crossings(self) -> int:
        """Number of order violations between neighbours (should be zero in 1-D)."""
        order = np.argsort(self.trajectories[0], kind="stable")
        tr = self.trajectories[:, order]
        return int(np.sum(np.diff(tr, axis=1) < -1e-9))

    def to_csv_rows(self, max_trajectories: Optional[int] = None):
        k = self.n if max_trajectories is None else min(self.n, max_trajectories)
        for i, t in enumerate(self.times):
            yield [t] + list(self.trajectories[i, :k])

    def summary(self) -> dict:
        return {
            "n_samples": int(self.n + self.discarded),
            "n_kept": int(self.n),
            "discarded": int(self.discarded),
            "times": [float(t) for t in self.times],
            "mean": [float(v) for v in self.trajectories.mean(axis=1)],
            "std": [float(v) for v in self.trajectories.std(axis=1)],
            "seed": int(self.seed),
        }


def sample_equilibrium(psi: WaveFunction, n_samples: int, seed: int) -> np.ndarray:
    """Inverse-CDF samples from ``|psi|^2`` (piecewise-constant cell density)."""
    grid = psi.grid
    w = psi.density() * grid.dx
    cdf = np.concatenate([[0.0], np.cumsum(w)])
    cdf /= cdf[-1]
    edges = grid.x_min + np.arange(grid.n_points + 1) * grid.dx
    u = block_generator(seed, 0).random(n_samples)
    return np.interp(u, cdf, edges)


def bohm_trajectories(psi0: WaveFunction, ham: LinearOperator, mass: float, times: Sequence[float],
                      n_samples: int, seed: int, rtol: float = 1e-8, atol: float = 1e-10,
                      initial_points: Optional[np.ndarray] = None) -> BohmEnsemble:
    """Integrate the guidance equation for an equilibrium ensemble.

    ``psi(t)`` is obtained exactly from the spectral decomposition of ``H``;
    trajectories are advanced together with an adaptive RK45 integrator.
    Trajectories that come within the node floor are discarded and counted.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing")
    grid = psi0.grid
    x0 = sample_equilibrium(psi0, n_samples, seed) if initial_points is None else np.asarray(initial_points, float)
    evo = _Evolution(psi0, ham)
    flagged = np.zeros(len(x0), dtype=bool)

    def rhs(t, y):
        amp = evo(t)
        v = velocity_field(amp, grid.dx, mass)
        bad = np.isnan(v)
        v = np.where(bad, 0.0, v)
        mod = _periodic_interp(grid, np.abs(amp), y)
        flagged[mod < NODE_FLOOR] = True
        return _periodic_interp(grid, v, y)

    t_eval = times
    t0 = min(0.0, times[0])
    max_step = np.inf
    for attempt in range(11):
        sol = solve_ivp(rhs, (t0, times[-1]), x0, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol,
                        max_step=max_step)
        if sol.success:
            break
        max_step = (times[-1] - t0) / (10 * 2**attempt)
    else:
        raise RuntimeError(f"guidance integration failed: {sol.message}")
    traj = np.asarray(sol.y).T
    keep = ~flagged
    return BohmEnsemble(psi0, mass, times, x0[keep], traj[:, keep], int(flagged.sum()), seed)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n: int


def bohm_multitime_probability(ens: BohmEnsemble, h: HistorySpec) -> McEstimate:
    """Fraction of trajectories inside every ``U_k`` at ``t_k``."""
    hit = np.ones(ens.n, dtype=bool)
    for t, u in h.entries:
        hit &= u.contains(ens.positions_at(t))
    p = float(hit.mean())
    return McEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / ens.n), ens.n)


def equilibrium_chi2(ens: BohmEnsemble, ham: LinearOperator, t: float, n_bins: int = 20) -> Tuple[float, float]:
    """Chi-square test of trajectory positions against ``|psi(t)|^2``.

    Bins are equiprobable under the evolved density.  Returns ``(statistic, p)``.
    """
    grid = ens.psi0.grid
    amp = _Evolution(ens.psi0, ham)(t)
    w = np.abs(amp) ** 2 * grid.dx
    cdf = np.concatenate([[0.0], np.cumsum(w)])
    cdf /= cdf[-1]
    edges_x = grid.x_min + np.arange(grid.n_points + 1) * grid.dx
    qs = np.linspace(0, 1, n_bins + 1)
    cuts = np.interp(qs[1:-1], cdf, edges_x)
    pos = ens.positions_at(t)
    counts = np.bincount(np.searchsorted(cuts, pos, side="right"), minlength=n_bins)
    expected = np.full(n_bins, ens.n / n_bins)
    res = stats.chisquare(counts, expected)
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------------
# local hidden-variable models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalHvModel:
    """Two-time measurement model with apparatus variables ``Q1, Q2 ~ N(0, 1)``.

    ``reading1(x0, q1, n1)`` is the first pointer value, ``first(x0, q1, n1)``
    the system position right after the first impulse (back-action included)
    and ``second(x1, q1, q2, n2)`` the position read by the second pointer.
    ``n1, n2`` are the model's own standard-normal noises (``None`` for
    deterministic models).  With ``local=True`` the post-``t1`` update may read
    only ``(x1, q2)``; this is probed on construction.  ``q1_breaks`` lists
    discontinuities in ``q1`` so that quadrature can split there.
    """

    reading1: Callable
    first: Callable
    second: Callable
    local: bool
    stochastic: bool = False
    q1_breaks: Tuple[float, ...] = (0.0,)
    name: str = "model"

    def __post_init__(self):
        if self.local:
            probe = np.random.default_rng(12345)
            x1 = probe.normal(size=64) * 3
            q2 = probe.normal(size=64)
            n2 = probe.normal(size=64) if self.stochastic else None
            a = self.second(x1, probe.normal(size=64), q2, n2)
            b = self.second(x1, probe.normal(size=64), q2, n2)
            if np.max(np.abs(np.asarray(a) - np.asarray(b))) > 0:
                raise ValueError("model flagged local but the post-t1 update reads Q1")


def _sign(q) -> np.ndarray:
    return np.where(np.asarray(q) >= 0, 1.0, -1.0)


def kicked_flow_model(sigma: float, mass: float, t1: float, t2: float, coupling: float = 0.0) -> LocalHvModel:
    """Deterministic model built on the free-Gaussian Bohm flow ``x0 s(t)``.

    The first pointer reads ``x0 s(t1)``; the back-action flips the system,
    ``x -> sign(Q1) x``, which preserves the symmetric equilibrium density so
    every single-time pointer statistics is the Born value.  A nonzero
    ``coupling`` adds ``coupling * Q1`` after ``t1`` and breaks locality.
    """
    s1 = _spread(sigma, mass, t1)
    s2 = _spread(sigma, mass, t2)

    def reading1(x0, q1, n1=None):
        return np.asarray(x0) * s1

    def first(x0, q1, n1=None):
        return _sign(q1) * np.asarray(x0) * s1

    def second(x1, q1, q2, n2=None):
        out = np.asarray(x1) * (s2 / s1)
        return out if coupling == 0.0 else out + coupling * np.asarray(q1)

    return LocalHvModel(reading1, first, second, local=(coupling == 0.0), name="kicked-flow")


def markov_kick_model(diffusion: float, t1: float, t2: float, coupling: float = 0.0) -> LocalHvModel:
    """Brownian motion read at ``t1``, sign-flipped by ``Q1``, read again at ``t2``."""
    sd1 = math.sqrt(2 * diffusion * t1)
    sd2 = math.sqrt(2 * diffusion * (t2 - t1))

    def reading1(x0, q1, n1):
        return np.asarray(x0) + sd1 * np.asarray(n1)

    def first(x0, q1, n1):
        return _sign(q1) * (np.asarray(x0) + sd1 * np.asarray(n1))

    def second(x1, q1, q2, n2):
        out = np.asarray(x1) + sd2 * np.asarray(n2)
        return out if coupling == 0.0 else out + coupling * np.asarray(q1)

    return LocalHvModel(reading1, first, second, local=(coupling == 0.0), stochastic=True, name="markov-kick")


def _spread(sigma: float, mass: float, t: float) -> float:
    return math.sqrt(1.0 + (t / (2 * mass * sigma * sigma)) ** 2)


def _q_nodes(breaks: Sequence[float], order: int = 32) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes for ``Q ~ N(0,1)`` in the uniform variable, split at ``breaks``."""
    xs, ws = np.polynomial.legendre.leggauss(order)
    cuts = [0.0] + sorted(float(stats.norm.cdf(b)) for b in breaks) + [1.0]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        nodes.append(0.5 * (b - a) * xs + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * ws)
    return ndtri(np.concatenate(nodes)), np.concatenate(weights)


def _set_measure(member: Callable[[np.ndarray], np.ndarray], law, scan: int = 4001) -> float:
    """Measure under ``law`` of ``{x0 : member(x0)}`` by a scan plus bisection of every boundary."""
    lo, hi = law.ppf(1e-13), law.ppf(1 - 1e-13)
    xs = np.linspace(lo, hi, scan)
    ind = member(xs)
    flips = np.where(ind[1:] != ind[:-1])[0]
    a = xs[flips].copy()
    b = xs[flips + 1].copy()
    ia = ind[flips].copy()
    for _ in range(200):
        if np.all(b - a <= 4e-16 * np.maximum(1.0, np.abs(a))):
            break
        mid = 0.5 * (a + b)
        same = member(mid) == ia
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    pts = np.concatenate([[-np.inf], 0.5 * (a + b), [np.inf]])
    mass = np.diff(law.cdf(pts))
    # membership alternates between consecutive boundaries
    inside = np.array([bool(ind[0]) ^ (k % 2 == 1) for k in range(len(mass))])
    return float(np.sum(mass[inside]))


def local_hv_two_time(model: LocalHvModel, x0_law, sets: Tuple[SampleSet, SampleSet],
                      method: str = "quadrature", n_samples: int = 100000, seed: int = 0):
    """Pointer two-time probability ``p^2(U1, t1; U2, t2)`` of a local model.

    ``x0_law`` is a frozen ``scipy.stats`` distribution of the initial system
    position.  ``method="quadrature"`` (deterministic models) integrates
    ``Q1`` by Gauss-Legendre in its uniform variable and measures the ``x0``
    set exactly by boundary bisection; ``method="mc"`` samples all variables
    and returns an ``McEstimate``.
    """
    if not model.local:
        raise ValueError("locality flag unset: the factorisation hypothesis does not hold")
    return pointer_two_time(model, x0_law, sets, method, n_samples, seed)


def pointer_two_time(model: LocalHvModel, x0_law, sets, method: str = "quadrature",
                     n_samples: int = 100000, seed: int = 0, decoupled: bool = False):
    """Pointer statistics of any model (no locality requirement).

    With ``decoupled=True`` the post-``t1`` update receives a fresh copy of
    ``Q1``: this is the system-only path process that the factorisation
    argument produces, and it coincides with the pointer statistics exactly
    when the model is local.
    """
    u1, u2 = sets
    if method == "quadrature":
        if model.stochastic:
            raise ValueError("quadrature evaluation needs a deterministic model")
        q1, w1 = _q_nodes(model.q1_breaks)
        total = 0.0
        for a, wa in zip(q1, w1):
            inner = zip(q1, w1) if decoupled else [(a, 1.0)]
            for b, wb in inner:
                def member(x0, a=a, b=b):
                    x1 = model.first(x0, a)
                    return u1.contains(model.reading1(x0, a)) & u2.contains(model.second(x1, b, 0.0))
                total += wa * wb * _set_measure(member, x0_law)
        return total
    if method == "mc":
        rng = block_generator(seed, 7)
        x0 = x0_law.rvs(size=n_samples, random_state=rng)
        q1 = rng.standard_normal(n_samples)
        q1b = rng.standard_normal(n_samples) if decoupled else q1
        q2 = rng.standard_normal(n_samples)
        n1 = rng.standard_normal(n_samples)
        n2 = rng.standard_normal(n_samples)
        x1 = model.first(x0, q1, n1)
        hit = u1.contains(model.reading1(x0, q1, n1)) & u2.contains(model.second(x1, q1b, q2, n2))
        p = float(hit.mean())
        return McEstimate(p, math.sqrt(p * (1 - p) / n_samples), n_samples)
    raise ValueError(f"unknown method {method!r}")


def system_only_two_time(model: LocalHvModel, x0_law, sets: Tuple[SampleSet, SampleSet],
                         method: str = "quadrature", n_samples: int = 100000, seed: int = 1):
    """Two-time probability of the system's own path process (see ``pointer_two_time``)."""
    return pointer_two_time(model, x0_law, sets, method, n_samples, seed, decoupled=True)


def kicked_flow_process_probability(sigma: float, mass: float, t1: float, t2: float,
                                    u1: SampleSet, u2: SampleSet) -> float:
    """Closed form for the kicked-flow path process.

    The path is ``(x0 s1, e x0 s2)`` with a fair sign ``e``; the event is an
    intersection of scaled interval preimages, measured with the Gaussian CDF
    of ``x0``.
    """
    s1, s2 = _spread(sigma, mass, t1), _spread(sigma, mass, t2)
    law = stats.norm(0, sigma)
    total = 0.0
    for e in (1.0, -1.0):
        pre = u1.scaled(1.0 / s1).intersect(u2.scaled(e / s2))
        total += 0.5 * sum(law.cdf(b) - law.cdf(a) for a, b in pre.intervals)
    return float(total)


def kick_markov_kernels(grid: Grid, diffusion: float, t1: float, t2: float) -> List[MarkovKernel]:
    """Grid kernels of the Markov-kick path process: heat step; reflection then heat step."""
    return [heat_kernel(grid, diffusion, t1),
            reflection_kernel(grid).compose(heat_kernel(grid, diffusion, t2 - t1))]


@dataclass(frozen=True)
class UnsharpReport:
    p_unsharp: float
    p_sharp: float
    defect: float
    delta: float
    length: float
    c_measured: float


def unsharp_hv_check(model: LocalHvModel, delta: float, sets: Tuple[SampleSet, SampleSet], x0_law,
                     order: int = 64, panels: int = 400) -> UnsharpReport:
    """Smeared pointer statistics against the sharp system path process.

    ``E[chi^d_U1(X1) chi^d_U2(X2)]`` versus ``E[chi_U1(X1) chi_U2(X2)]`` for a
    deterministic model; the defect is ``O(delta)`` and ``c_measured`` is the
    defect divided by ``delta / L`` with ``L`` the shorter set length.
    """
    if model.stochastic:
        raise ValueError("unsharp check needs a deterministic model")
    u1, u2 = sets
    length = min(u1.measure, u2.measure)
    q1, w1 = _q_nodes(model.q1_breaks)
    xs, ws = np.polynomial.legendre.leggauss(order)
    lo, hi = x0_law.ppf(1e-14), x0_law.ppf(1 - 1e-14)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    pts = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * xs[None, :]
    wts = ((half[:, None] * ws[None, :]) * x0_law.pdf(pts)).ravel()
    pts = pts.ravel()
    ind1 = SmearedIndicator(u1, delta)
    ind2 = SmearedIndicator(u2, delta)
    smooth = 0.0
    sharp = 0.0
    for a, wa in zip(q1, w1):
        r1 = model.reading1(pts, a)
        r2 = model.second(model.first(pts, a), a, 0.0)
        smooth += wa * float(np.sum(wts * smeared_chi(ind1, r1) * smeared_chi(ind2, r2)))

        def member(x0, a=a):
            return u1.contains(model.reading1(x0, a)) & u2.contains(model.second(model.first(x0, a), a, 0.0))

        sharp += wa * _set_measure(member, x0_law)
    defect = abs(smooth - sharp)
    return UnsharpReport(float(smooth), float(sharp), float(defect), delta, length,
                         float(defect / (delta / length)) if length > 0 else math.nan)
