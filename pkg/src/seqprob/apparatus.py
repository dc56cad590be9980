"""Two-pointer measuring device with impulsive ``x (x) k`` couplings.

The system is coupled at ``t1`` and ``t2`` to two identical pointers, each
prepared in a momentum-space wave function ``<k|Psi0>`` on a symmetric
discrete momentum grid of spacing ``2 pi / P`` (pointer positions live on a
period of length ``P``).  Device self-dynamics is neglected and the couplings
are instantaneous, so after ``t2`` the composite state is

    C[x, k1, k2] = e^{-i k2 x} U(t2 - t1) e^{-i k1 x} U(t1) psi0 (x) a(k1) a(k2).

Pointer probabilities follow from the matrix elements
``K_U(k', k) = (1/P) int_U e^{i (k - k') q} dq``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import erfc

from .qcore import DensityOperator, LinearOperator, SampleSet, WaveFunction, apply_propagator
from .seqmeas import HistorySpec, sqrt_povm_probability

ALIAS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ApparatusState:
    """System state plus the pointer momentum amplitudes (shared by both pointers)."""

    psi0: WaveFunction
    k: np.ndarray
    amplitudes: np.ndarray
    period: float

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        a = np.asarray(self.amplitudes, dtype=complex)
        if k.shape != a.shape or k.ndim != 1:
            raise ValueError("momentum grid and amplitudes must match")
        if np.max(np.abs(k + k[::-1])) > 1e-12:
            raise ValueError("momentum grid must be symmetric about 0")
        if len(k) > 1 and np.max(np.abs(np.diff(k) - 2 * math.pi / self.period)) > 1e-9:
            raise ValueError("momentum spacing must be 2 pi / period")
        if len(k) > 64:
            raise ValueError("at most 64 momentum nodes")
        if abs(np.sum(np.abs(a) ** 2) - 1.0) > 1e-12:
            raise ValueError("pointer amplitudes must be normalised")
        if abs(self.psi0.norm - 1.0) > 1e-9:
            raise ValueError("system state must be normalised")
        for arr in (k, a):
            arr.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def gaussian(cls, psi0: WaveFunction, sigma_k: float, period: float = 40.0, n_k: int = 63) -> "ApparatusState":
        """Pointer ``<k|Psi0> ~ exp(-k^2 / (4 sigma_k^2))``; reading resolution ``1 / (2 sigma_k)``."""
        if n_k % 2 == 0:
            raise ValueError("use an odd number of momentum nodes")
        k = (np.arange(n_k) - (n_k - 1) / 2) * (2 * math.pi / period)
        if gaussian_truncation(k, sigma_k) > ALIAS_TOL:
            raise ValueError("momentum grid too narrow for the pointer spread (aliasing)")
        a = np.exp(-k**2 / (4 * sigma_k**2)).astype(complex)
        return cls(psi0, k, a / np.linalg.norm(a), period)

    @classmethod
    def sharp_momentum(cls, psi0: WaveFunction, period: float = 40.0, n_k: int = 63) -> "ApparatusState":
        """Pointer at zero momentum: the coupling acts trivially."""
        k = (np.arange(n_k) - (n_k - 1) / 2) * (2 * math.pi / period)
        a = (np.abs(k) < 1e-12).astype(complex)
        return cls(psi0, k, a, period)

    def pointer_wavefunction(self, q) -> np.ndarray:
        """``Psi0(q) = sum_k a(k) e^{i k q} / sqrt(P)``."""
        q = np.asarray(q, dtype=float)
        return np.exp(1j * q[..., None] * self.k) @ self.amplitudes / math.sqrt(self.period)


def gaussian_truncation(k: np.ndarray, sigma_k: float) -> float:
    """Probability of the continuous pointer law outside the momentum grid."""
    kmax = float(np.max(np.abs(k))) + 0.5 * (k[1] - k[0] if len(k) > 1 else 0.0)
    return float(erfc(kmax / (math.sqrt(2.0) * sigma_k)))


@dataclass(frozen=True)
class CouplingSpec:
    t1: float
    t2: float

    def __post_init__(self):
        if not (self.t2 > self.t1 >= 0):
            raise ValueError("impulse times need t2 > t1 >= 0")


@dataclass(frozen=True, eq=False)
class CompositeState:
    """Amplitudes ``C[x, k1, k2]`` after the second impulse."""

    coeff: np.ndarray
    app: ApparatusState
    coupling: CouplingSpec

    @property
    def norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.coeff) ** 2) * self.app.psi0.grid.dx))


def impulsive_total_state(app: ApparatusState, ham: LinearOperator, c: CouplingSpec) -> CompositeState:
    """Composite state right after the second impulse."""
    grid = app.psi0.grid
    if ham.grid != grid:
        raise ValueError("Hamiltonian and state live on different grids")
    x = grid.x
    phase = np.exp(-1j * np.outer(app.k, x))
    first = apply_propagator(ham, c.t1, app.psi0.amplitudes)
    kicked = phase * first[None, :]
    mid = apply_propagator(ham, c.t2 - c.t1, kicked)
    coeff = mid.T[:, :, None] * phase.T[:, None, :]
    coeff = coeff * (app.amplitudes[None, :, None] * app.amplitudes[None, None, :])
    return CompositeState(coeff, app, c)


def _window(u: SampleSet, period: float) -> SampleSet:
    return u.clip(-0.5 * period, 0.5 * period)


def pointer_set_matrix(k: np.ndarray, u: SampleSet, period: float) -> np.ndarray:
    """``K_U(k', k) = (1/P) int_U e^{i (k - k') q} dq`` with ``U`` clipped to one period."""
    dk = k[None, :] - k[:, None]
    out = np.zeros(dk.shape, dtype=complex)
    for a, b in _window(u, period).intervals:
        small = np.abs(dk) < 1e-14
        safe = np.where(small, 1.0, dk)
        seg = (np.exp(1j * safe * b) - np.exp(1j * safe * a)) / (1j * safe)
        out += np.where(small, b - a, seg)
    return out / period


def pointer_joint_distribution(state: CompositeState, u1: SampleSet, u2: SampleSet) -> float:
    """Probability that pointer 1 reads in ``u1`` and pointer 2 in ``u2``."""
    app = state.app
    k1 = pointer_set_matrix(app.k, u1, app.period)
    k2 = pointer_set_matrix(app.k, u2, app.period)
    c = state.coeff
    val = np.einsum("xab,ac,xcd,bd->", c.conj(), k1, c, k2, optimize=True)
    return float(val.real * app.psi0.grid.dx)


def single_pointer_distribution(app: ApparatusState, ham: LinearOperator, t1: float, u1: SampleSet) -> float:
    """One-impulse device: probability that the single pointer reads in ``u1``."""
    grid = app.psi0.grid
    first = apply_propagator(ham, t1, app.psi0.amplitudes)
    coeff = np.exp(-1j * np.outer(grid.x, app.k)) * first[:, None] * app.amplitudes[None, :]
    k1 = pointer_set_matrix(app.k, u1, app.period)
    val = np.einsum("xa,ab,xb->", coeff.conj(), k1, coeff, optimize=True)
    return float(val.real * grid.dx)


@dataclass(frozen=True)
class DeviceResolution:
    delta: float
    delta_stderr: float
    fit_residual: float


def resolution_from_device(app: ApparatusState, n_q: int = 2001) -> DeviceResolution:
    """Effective resolution of the induced effect ``|Psi0(y - x)|^2``.

    A centred Gaussian density is fitted to ``|Psi0(q)|^2`` over one period;
    ``fit_residual`` is the maximum deviation relative to the peak.
    """
    q = np.linspace(-0.5 * app.period, 0.5 * app.period, n_q)
    dens = np.abs(app.pointer_wavefunction(q)) ** 2

    def model(qq, amp, delta):
        return amp * np.exp(-0.5 * (qq / delta) ** 2)

    guess = math.sqrt(max(np.sum(q**2 * dens) / np.sum(dens), 1e-12))
    popt, pcov = curve_fit(model, q, dens, p0=(float(dens.max()), guess))
    resid = float(np.max(np.abs(model(q, *popt) - dens)) / dens.max())
    return DeviceResolution(float(abs(popt[1])), float(math.sqrt(max(pcov[1, 1], 0.0))), resid)


def identification_error(app: ApparatusState, ham: LinearOperator, c: CouplingSpec, sets1, sets2,
                         delta: Optional[float] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """Maximum gap between pointer statistics and the square-root POVM over ``sets1 x sets2``.

    Returns ``(max_error, pointer_table, povm_table)``; ``delta`` defaults to
    ``1 / (2 sigma_k)`` read off the pointer amplitudes.
    """
    if delta is None:
        w = np.abs(app.amplitudes) ** 2
        sigma_k = math.sqrt(float(np.sum(w * app.k**2)))
        delta = 1.0 / (2.0 * sigma_k)
    state = impulsive_total_state(app, ham, c)
    rho = DensityOperator.from_wavefunction(app.psi0)
    ptab = np.array([[pointer_joint_distribution(state, a, b) for b in sets2] for a in sets1])
    qtab = np.array([[sqrt_povm_probability(rho, HistorySpec.of((c.t1, a), (c.t2, b)), ham, delta)
                      for b in sets2] for a in sets1])
    return float(np.max(np.abs(ptab - qtab))), ptab, qtab
