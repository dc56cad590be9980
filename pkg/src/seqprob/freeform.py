"""Closed-form free-particle results and sine-integral quadratures.

Contents
--------
* ``sine_integral``: Si(x) to ~1e-12, no external special-function call.
* ``half_line_pair_quantities`` / ``ratio_curve``: the slit-experiment pair
  ``p_pp(r) = (1/pi) int_0^1 Si(z^2/r) dz`` and
  ``b(r) = (r/pi) int_0^1 (1 - cos(z^2/r)) / z^2 dz`` with ``r = t/(m L^2)``.
* ``box_half_line_probability``: exact ``<psi|P+ Q+(t) P+|psi>`` for the
  normalised box ``chi_[-L,L]/sqrt(2L)`` (used as a grid oracle).
* ``r2free_element`` / ``ralt_element``: kernel of the two-time Gaussian
  square-root POVM for a free particle.
* ``two_slit_density`` / ``two_slit_marginal``: second-time marginal of that
  POVM for a symmetric two-Gaussian slit state.
* ``time_averaged_projector`` and ``uncertainty_budget``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import constants
from scipy.integrate import quad
from scipy.special import erf

from .qcore import Grid, LinearOperator, SampleSet, SmearedIndicator, indicator, propagator, smeared_chi
from .seqmeas import EffectOperator

# ---------------------------------------------------------------------------
# sine integral
# ---------------------------------------------------------------------------

_SERIES_MAX = 4.0
_CF_MAX = 40.0


def _si_series(x: np.ndarray) -> np.ndarray:
    # Si(x) = sum (-1)^n x^(2n+1) / ((2n+1) (2n+1)!)
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, 40):
        term = -term * x2 / ((2 * n) * (2 * n + 1))
        total = total + term / (2 * n + 1)
        if np.all(np.abs(term) < 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _si_continued_fraction(x: np.ndarray) -> np.ndarray:
    # E1(ix) via its continued fraction (modified Lentz); Si = pi/2 + Im(e^{-ix} CF)
    tiny = 1e-300
    b = 1.0 + 1j * x
    c = np.full_like(b, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(2, 500):
        a = -float((i - 1) ** 2)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    h = (np.cos(x) - 1j * np.sin(x)) * h
    return 0.5 * np.pi + h.imag


def _si_asymptotic(x: np.ndarray) -> np.ndarray:
    # Si = pi/2 - f cos x - g sin x, truncated before the smallest term
    inv2 = 1.0 / (x * x)
    f = np.zeros_like(x)
    g = np.zeros_like(x)
    tf = np.ones_like(x)
    tg = np.ones_like(x)
    for k in range(12):
        f += tf
        g += tg
        tf = -tf * (2 * k + 1) * (2 * k + 2) * inv2
        tg = -tg * (2 * k + 2) * (2 * k + 3) * inv2
    f /= x
    g *= inv2
    return 0.5 * np.pi - f * np.cos(x) - g * np.sin(x)


def sine_integral(x):
    """Sine integral ``Si(x) = int_0^x sin(u)/u du``.

    Power series for ``|x| < 4``; for larger arguments the auxiliary functions
    are evaluated from the continued fraction of ``E1(ix)`` up to ``|x| = 40``
    and from their asymptotic expansion beyond.  Odd in ``x``.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    a = np.atleast_1d(np.abs(arr))
    out = np.empty_like(a)
    m1 = a < _SERIES_MAX
    m3 = a >= _CF_MAX
    m2 = ~(m1 | m3)
    if m1.any():
        out[m1] = _si_series(a[m1])
    if m2.any():
        out[m2] = _si_continued_fraction(a[m2])
    if m3.any():
        out[m3] = _si_asymptotic(a[m3])
    out = np.sign(np.atleast_1d(arr)) * out
    return float(out[0]) if scalar else out.reshape(arr.shape)


# ---------------------------------------------------------------------------
# composite Gauss-Legendre quadrature
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _composite_gl(fn, a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = fn(pts)
    return float(np.sum(vals * _GL_WEIGHTS[None, :] * half[:, None]))


def _converged_quad(fn, a: float, b: float, panels: int, tol: float = 1e-11, max_doublings: int = 12) -> Tuple[float, int]:
    prev = _composite_gl(fn, a, b, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _composite_gl(fn, a, b, panels)
        if abs(cur - prev) < tol:
            return cur, panels
        prev = cur
    return prev, panels


# ---------------------------------------------------------------------------
# slit experiment pair
# ---------------------------------------------------------------------------


def _one_minus_cos_over_sq(u: np.ndarray) -> np.ndarray:
    # (1 - cos(u^2)) / u^2 = 2 sin^2(u^2 / 2) / u^2, regular at u = 0
    w = 0.5 * u * u
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(u == 0, 0.0, 2.0 * np.sin(w) ** 2 / np.where(u == 0, 1.0, u * u))
    return out


@dataclass(frozen=True)
class HalfLinePair:
    r: float
    p_pp: float
    b: float

    @property
    def ratio(self) -> float:
        return self.b / self.p_pp


def _panels_for(upper: float) -> int:
    return max(8, int(math.ceil(upper * upper / 2.0)) + 8)


_SPLIT = 200.0


def _oscillatory_tail(x: float) -> float:
    # int_x^inf cos(u^2) / u^2 du = -sin(x^2) / (2 x^3) + O(x^-5)
    return -math.sin(x * x) / (2.0 * x**3)


@lru_cache(maxsize=None)
def _split_integrals() -> Tuple[float, float]:
    """``int_0^A (pi/2 - Si(u^2)) du`` and ``int_0^A (1 - cos u^2) / u^2 du`` for ``A = _SPLIT``."""
    n = _panels_for(_SPLIT)
    ip, _ = _converged_quad(lambda u: 0.5 * math.pi - sine_integral(u * u), 0.0, _SPLIT, n)
    ib, _ = _converged_quad(_one_minus_cos_over_sq, 0.0, _SPLIT, n)
    return ip, ib


def half_line_pair_quantities(r: float, panels: Optional[int] = None) -> HalfLinePair:
    """``(p_pp, b)`` for dimensionless time ``r = t/(m L^2)``.

    Both integrals are taken in ``u = z / sqrt(r)``, which makes the ``z -> 0``
    endpoint of ``b`` regular:
    ``p_pp = (sqrt r / pi) int_0^{1/sqrt r} Si(u^2) du``,
    ``b = (sqrt r / pi) int_0^{1/sqrt r} (1 - cos u^2) / u^2 du``.
    For upper limits beyond ``_SPLIT`` the integrands are split into a
    non-oscillatory part and remainders integrated up to ``_SPLIT`` by
    quadrature and beyond it by the leading asymptotic term, with error
    ``O(_SPLIT^-5)``.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    sr = math.sqrt(r)
    upper = 1.0 / sr
    if panels is None and upper > _SPLIT:
        jp, jb = _split_integrals()
        # remainders: pi/2 - Si(u^2) ~ cos(u^2)/u^2 and (1 - cos u^2)/u^2 = 1/u^2 - cos(u^2)/u^2
        mid = _oscillatory_tail(_SPLIT) - _oscillatory_tail(upper)
        ip = 0.5 * math.pi * upper - (jp + mid)
        ib = jb + (1.0 / _SPLIT - 1.0 / upper) - mid
        return HalfLinePair(float(r), sr * ip / math.pi, sr * ib / math.pi)
    n = panels or _panels_for(upper)
    if panels is None:
        ip, _ = _converged_quad(lambda u: sine_integral(u * u), 0.0, upper, n)
        ib, _ = _converged_quad(_one_minus_cos_over_sq, 0.0, upper, n)
    else:
        ip = _composite_gl(lambda u: sine_integral(u * u), 0.0, upper, n)
        ib = _composite_gl(_one_minus_cos_over_sq, 0.0, upper, n)
    return HalfLinePair(float(r), sr * ip / math.pi, sr * ib / math.pi)


@dataclass
class RatioCurve:
    r_values: List[float]
    p_pp: List[float]
    b: List[float]
    ratio: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.ratio:
            self.ratio = [bb / pp for bb, pp in zip(self.b, self.p_pp)]
        n = len(self.r_values)
        if not (len(self.p_pp) == len(self.b) == len(self.ratio) == n):
            raise ValueError("curve columns must have equal lengths")

    def rows(self):
        return zip(self.r_values, self.p_pp, self.b, self.ratio)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "p_pp", "b", "ratio"])
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def ratio_curve(r_values: Iterable[float]) -> RatioCurve:
    vals = [half_line_pair_quantities(float(r)) for r in r_values]
    return RatioCurve([v.r for v in vals], [v.p_pp for v in vals], [v.b for v in vals])


def box_half_line_probability(r: float) -> float:
    """Exact ``<psi|P+ e^{iHt} P+ e^{-iHt} P+|psi>`` for ``psi = chi_[-L,L]/sqrt(2L)``.

    ``1/4 + (1/(4 pi)) [int_0^1 Si(z^2/(2r)) dz + int_1^2 Si(z(2-z)/(2r)) dz]``.
    The companion interference term ``2 Re <psi|P+ Q+ P-|psi>`` vanishes
    identically for this state by reflection symmetry.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    n = _panels_for(1.0 / math.sqrt(2 * r))
    i1, _ = _converged_quad(lambda z: sine_integral(z * z / (2 * r)), 0.0, 1.0, n)
    i2, _ = _converged_quad(lambda z: sine_integral(z * (2 - z) / (2 * r)), 1.0, 2.0, n)
    return 0.25 + (i1 + i2) / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# two-time free-particle kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeParams:
    mass: float
    time: float
    delta: float
    sigma: Optional[float] = None
    separation: Optional[float] = None

    def __post_init__(self):
        for name in ("mass", "time", "delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma", "separation"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def beta(self) -> float:
        m, t, d = self.mass, self.time, self.delta
        return 1.0 / (2 * d * d) + 2 * m * m * d * d / (t * t)

    @property
    def gamma(self) -> float:
        if self.sigma is None:
            raise ValueError("sigma not set")
        m, t, s = self.mass, self.time, self.sigma
        return 1.0 / (s * s) + m * m * s * s / (t * t)


def envelope_rate(p: FreeParams) -> float:
    """Coefficient ``a`` in ``|R(x, x + D)| ~ exp(-a D^2)``."""
    return 0.5 * (p.mass**2 * p.delta**2 / p.time**2 + 1.0 / (4 * p.delta**2))


def _interval_ft(u: SampleSet, k: float) -> complex:
    """``(1/2 pi) int_U e^{iku} du`` for a bounded set."""
    total = 0j
    for a, b in u.intervals:
        if abs(k) < 1e-12:
            total += (b - a) + 0.5j * k * (b * b - a * a)
        else:
            total += (np.exp(1j * k * b) - np.exp(1j * k * a)) / (1j * k)
    return total / (2 * math.pi)


def ralt_element(x: float, xp: float, u1: SampleSet, u2: SampleSet, p: FreeParams) -> complex:
    """Factorised kernel ``R(x, x')`` of the two-time POVM (first slot at 0, second at ``t``).

    ``(m/t) chi~_{U2 - c}(m D / t) chi^delta_{U1}(c) exp(-a D^2)`` with
    ``c = (x + x')/2``, ``D = x - x'`` and ``chi~_V(k) = (1/2pi) int_V e^{iku} du``.
    """
    if not u2.is_bounded:
        raise ValueError("second-time set must be bounded for a pointwise kernel")
    m, t = p.mass, p.time
    c, dd = 0.5 * (x + xp), x - xp
    ft = _interval_ft(u2.shifted(-c), m * dd / t)
    chi1 = float(smeared_chi(SmearedIndicator(u1, p.delta), c))
    return complex(m / t * ft * chi1 * math.exp(-envelope_rate(p) * dd * dd))


def r2free_element(x: float, xp: float, u1: SampleSet, u2: SampleSet, p: FreeParams) -> complex:
    """Kernel ``R(x, x')`` from direct quadrature of its double-integral form.

    ``m / ((2pi)^{3/2} t delta) int_{U1} dx1 int_{U2} dx2
    exp(-a D^2 - (x1 - c)^2 / (2 delta^2)) exp(i m D (x2 - c) / t)``.
    """
    if not u2.is_bounded:
        raise ValueError("second-time set must be bounded for a pointwise kernel")
    m, t, d = p.mass, p.time, p.delta
    c, dd = 0.5 * (x + xp), x - xp
    pref = m / ((2 * math.pi) ** 1.5 * t * d) * math.exp(-envelope_rate(p) * dd * dd)
    g = 0.0
    for a, b in u1.intervals:
        lo, hi = max(a, c - 40 * d), min(b, c + 40 * d)
        if hi > lo:
            g += quad(lambda y: math.exp(-((y - c) ** 2) / (2 * d * d)), lo, hi,
                      points=[c] if lo < c < hi else None, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    kk = m * dd / t
    re = im = 0.0
    for a, b in u2.intervals:
        n = 4 + int(abs(kk) * (b - a))
        re += _converged_quad(lambda y: np.cos(kk * (y - c)), a, b, n, tol=1e-14)[0]
        im += _converged_quad(lambda y: np.sin(kk * (y - c)), a, b, n, tol=1e-14)[0]
    return complex(pref * g * (re + 1j * im))


# ---------------------------------------------------------------------------
# two-slit marginal
# ---------------------------------------------------------------------------


def two_slit_state(x, sigma: float, separation: float) -> np.ndarray:
    """Unnormalised ``exp(-(x-L/2)^2/(2 s^2)) + exp(-(x+L/2)^2/(2 s^2))``."""
    x = np.asarray(x, dtype=float)
    h = 0.5 * separation
    return np.exp(-((x - h) ** 2) / (2 * sigma**2)) + np.exp(-((x + h) ** 2) / (2 * sigma**2))


def _slit_terms(p: FreeParams):
    if p.sigma is None or p.separation is None:
        raise ValueError("two-slit marginal needs sigma and separation")
    m, t, s, ll = p.mass, p.time, p.sigma, p.separation
    bg = p.beta + p.gamma
    alpha = m * m / (t * t * bg)
    overlap = math.exp(-ll * ll / (4 * s * s))
    norm = 1.0 / (2.0 * (1.0 + overlap)) * (m / t) / math.sqrt(math.pi * bg)
    fringe = 2.0 * math.exp(-ll * ll / (4 * s * s) * (1.0 - 1.0 / (s * s * bg)))
    kappa = m * ll / (t * s * s * bg)
    return norm, alpha, fringe, kappa, 0.5 * ll


def two_slit_density(x, p: FreeParams) -> np.ndarray:
    """Density of the second-time reading for the slit state, first slot unrestricted."""
    norm, alpha, fringe, kappa, h = _slit_terms(p)
    x = np.asarray(x, dtype=float)
    return norm * (np.exp(-alpha * (x - h) ** 2) + np.exp(-alpha * (x + h) ** 2)
                   + fringe * np.exp(-alpha * x * x) * np.cos(kappa * x))


def fringe_visibility(p: FreeParams) -> float:
    """Interference amplitude relative to the envelope at the midpoint."""
    norm, alpha, fringe, kappa, h = _slit_terms(p)
    return fringe / (2.0 * math.exp(-alpha * h * h))


def interference_period(p: FreeParams) -> float:
    """Fringe spacing ``2 pi t sigma^2 (beta + gamma) / (m L)``."""
    _, _, _, kappa, _ = _slit_terms(p)
    return 2 * math.pi / kappa


def _gauss_interval(alpha: float, mu: float, a: float, b: float) -> float:
    s = math.sqrt(alpha)
    return 0.5 * math.sqrt(math.pi / alpha) * (math.erf(s * (b - mu)) - math.erf(s * (a - mu)))


def _gauss_cos_interval(alpha: float, kappa: float, a: float, b: float) -> float:
    # Re int_a^b exp(-alpha x^2 + i kappa x) dx
    s = math.sqrt(alpha)
    z0 = 1j * kappa / (2 * alpha)
    val = erf(s * (b - z0)) - erf(s * (a - z0))
    return float((0.5 * math.sqrt(math.pi / alpha) * math.exp(-kappa * kappa / (4 * alpha)) * val).real)


def two_slit_marginal(u: SampleSet, p: FreeParams) -> float:
    """Integral of ``two_slit_density`` over ``u`` in closed form."""
    norm, alpha, fringe, kappa, h = _slit_terms(p)
    cut = h + 40.0 / math.sqrt(alpha)
    total = 0.0
    for a, b in (u.intervals if not u.full else ((-math.inf, math.inf),)):
        a, b = max(a, -cut), min(b, cut)
        if b <= a:
            continue
        total += _gauss_interval(alpha, h, a, b) + _gauss_interval(alpha, -h, a, b)
        total += fringe * _gauss_cos_interval(alpha, kappa, a, b)
    return float(norm * total)


def measured_period(p: FreeParams, half_width: Optional[float] = None, n: int = 200001) -> float:
    """Mean spacing of the maxima of the interference component near the centre.

    The incoherent single-slit contributions are subtracted from the density
    first; the fringes are rarely resolvable as maxima of the full density.
    """
    norm, alpha, _, _, h = _slit_terms(p)
    if half_width is None:
        half_width = 1.6 * interference_period(p)
    x = np.linspace(-half_width, half_width, n)
    y = two_slit_density(x, p) - norm * (np.exp(-alpha * (x - h) ** 2) + np.exp(-alpha * (x + h) ** 2))
    peaks = np.where((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    if len(peaks) < 2:
        return math.nan
    return float(np.mean(np.diff(x[peaks])))


# ---------------------------------------------------------------------------
# time-averaged projector and uncertainty budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeAveragedProjector:
    effect: EffectOperator
    spread: float
    weighted_spread: Optional[float]
    leading_order: Optional[float]


def time_averaged_projector(u: SampleSet, tau: float, ham: LinearOperator, grid: Optional[Grid] = None,
                            t: float = 0.0, rho=None, width: Optional[float] = None,
                            nodes: int = 8) -> TimeAveragedProjector:
    """``(1/tau) int_{t-tau/2}^{t+tau/2} e^{iHs} P_U e^{-iHs} ds`` by Gauss-Legendre.

    ``spread`` is ``||Pi - Pi^2||``; with a state ``rho`` the weighted spread
    ``Tr(rho (Pi - Pi^2))`` is reported too, and with a trace ``width`` ``d``
    (and a free Hamiltonian) the leading-order estimate ``tau / (m d)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = grid or ham.grid
    p = np.diag(indicator(u, grid)).astype(complex)
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    acc = np.zeros_like(p)
    for xi, wi in zip(xs, ws):
        s = t + 0.5 * tau * xi
        v = propagator(ham, s)
        acc += 0.5 * wi * (v.conj().T @ p @ v)
    acc = 0.5 * (acc + acc.conj().T)
    defect = acc - acc @ acc
    spread = float(np.linalg.norm(defect, 2))
    weighted = None
    if rho is not None:
        weighted = float(np.real(np.sum(np.asarray(rho.matrix) * defect.T)) * grid.dx)
    lead = None
    if width is not None and ham.free_mass is not None:
        lead = tau / (ham.free_mass * width)
    eff = EffectOperator(LinearOperator(grid, acc, hermitian=True))
    return TimeAveragedProjector(eff, spread, weighted, lead)


@dataclass(frozen=True)
class UncertaintyBudget:
    pos_err: float
    time_err: float
    c1: float
    c2: float

    @property
    def total(self) -> float:
        return self.pos_err + self.time_err


NEUTRON_MASS = constants.physical_constants["neutron mass"][0]


def uncertainty_budget(length: float, d: float, v_z: float, mass: float,
                       c1: float = 1.0, c2: float = 1.0) -> UncertaintyBudget:
    """SI budget: ``pos_err = c1 d / L`` and ``time_err = c2 hbar L / (m d^2 v_z)``."""
    for name, v in (("length", length), ("d", d), ("v_z", v_z), ("mass", mass)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    pos = c1 * d / length
    tim = c2 * constants.hbar * length / (mass * d * d * v_z)
    return UncertaintyBudget(pos, tim, c1, c2)
