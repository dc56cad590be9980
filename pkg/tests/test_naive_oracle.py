"""Independent brute-force reimplementation on an 8-point grid.

Everything here is built from explicit loops, ``scipy.linalg.expm`` and
``scipy.integrate.quad``; no package code is used to produce the reference.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from seqprob.qcore import DensityOperator, Grid, SampleSet, WaveFunction, free_hamiltonian
from seqprob.seqmeas import (
    HistorySpec,
    PovmKind,
    class_operator,
    decoherence_functional,
    discrete_two_time_povm,
    fine_grained_probability,
    history_probability,
    interference_term,
    sqrt_povm_probability,
    sqrt_povm_sequential,
)

N = 8
X_MIN, X_MAX = -4.0, 4.0
DX = (X_MAX - X_MIN) / N
XS = [X_MIN + (i + 0.5) * DX for i in range(N)]
TOL = 1e-12


def naive_hamiltonian(mass):
    h = np.zeros((N, N), dtype=complex)
    for a in range(N):
        for b in range(N):
            s = 0.0
            for m in range(N):
                mm = m if m < N // 2 else m - N
                k = 2 * math.pi * mm / (N * DX)
                s += k * k / (2 * mass) * np.exp(1j * k * (XS[a] - XS[b])) / N
            h[a, b] = s
    return h


def naive_state():
    amp = [math.exp(-((x - 0.3) ** 2) / 4.0) * complex(math.cos(0.4 * x), math.sin(0.4 * x)) for x in XS]
    nrm = math.sqrt(sum(abs(a) ** 2 for a in amp) * DX)
    amp = [a / nrm for a in amp]
    return np.array([[amp[i] * amp[j].conjugate() for j in range(N)] for i in range(N)])


def inside(x, interval):
    return interval[0] <= x < interval[1]


def projector(interval):
    p = np.zeros((N, N), dtype=complex)
    for i in range(N):
        if inside(XS[i], interval):
            p[i, i] = 1.0
    return p


def matmul(*ms):
    out = np.eye(N, dtype=complex)
    for m in ms:
        nxt = np.zeros((N, N), dtype=complex)
        for i in range(N):
            for j in range(N):
                nxt[i, j] = sum(out[i, k] * m[k, j] for k in range(N))
        out = nxt
    return out


def dagger(m):
    return np.array([[m[j, i].conjugate() for j in range(N)] for i in range(N)])


def trace(m):
    return sum(m[i, i] for i in range(N))


def sandwich(a, interval, delta):
    """``int_U dx sqrt(f(x - x_i)) A_ij sqrt(f(x - x_j))`` by adaptive quadrature."""
    out = np.zeros((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            def integrand(x):
                fi = math.exp(-0.5 * ((x - XS[i]) / delta) ** 2) / (math.sqrt(2 * math.pi) * delta)
                fj = math.exp(-0.5 * ((x - XS[j]) / delta) ** 2) / (math.sqrt(2 * math.pi) * delta)
                return math.sqrt(fi * fj)
            val, _ = quad(integrand, interval[0], interval[1], epsabs=1e-14, epsrel=1e-13, limit=200)
            out[i, j] = a[i, j] * val
    return out


@pytest.fixture(scope="module")
def setup():
    g = Grid(N, X_MIN, X_MAX)
    ham = free_hamiltonian(g, 1.5)
    psi = WaveFunction.gaussian(g, 0.3, 1.0, 0.4)
    return g, ham, DensityOperator.from_wavefunction(psi)


def test_hamiltonian_matches(setup):
    g, ham, _ = setup
    assert np.max(np.abs(ham.matrix - naive_hamiltonian(1.5))) < TOL


def test_state_matches(setup):
    g, ham, rho = setup
    assert np.max(np.abs(rho.matrix - naive_state())) < TOL


HISTORIES = [
    [(0.0, (0.0, math.inf)), (1.0, (0.0, math.inf))],
    [(0.3, (-1.0, 3.0)), (0.8, (-math.inf, 1.0)), (1.7, (-2.0, 2.0))],
]


def _spec(entries):
    return HistorySpec.of(*[(t, SampleSet.interval(a, b)) for t, (a, b) in entries])


def naive_class_operator(entries, h):
    c = np.eye(N, dtype=complex)
    for t, iv in entries:
        u = expm(-1j * h * t)
        c = matmul(dagger(u), projector(iv), u, c)
    return c


@pytest.mark.parametrize("entries", HISTORIES)
def test_class_operator_and_probability(setup, entries):
    g, ham, rho = setup
    h = naive_hamiltonian(1.5)
    ref_c = naive_class_operator(entries, h)
    kind = PovmKind.sharp_grid(DX)
    assert np.max(np.abs(class_operator(_spec(entries), ham, kind) - ref_c)) < TOL
    ref_p = trace(matmul(ref_c, naive_state(), dagger(ref_c))).real * DX
    assert abs(history_probability(rho, _spec(entries), ham, kind) - ref_p) < TOL


def test_decoherence_functional(setup):
    g, ham, rho = setup
    h = naive_hamiltonian(1.5)
    a = [(0.0, (0.0, math.inf)), (1.0, (-1.0, 2.0))]
    b = [(0.0, (-math.inf, 0.0)), (1.0, (-1.0, 2.0))]
    ref = trace(matmul(naive_class_operator(a, h), naive_state(), dagger(naive_class_operator(b, h)))) * DX
    got = decoherence_functional(rho, _spec(a), _spec(b), ham, PovmKind.sharp_grid(DX)).value
    assert abs(got - ref) < TOL


def naive_sqrt_povm(entries, h, delta):
    # Heisenberg recursion from the last slot backwards
    r = sandwich(np.eye(N, dtype=complex), entries[-1][1], delta)
    for k in range(len(entries) - 2, -1, -1):
        u = expm(-1j * h * (entries[k + 1][0] - entries[k][0]))
        r = sandwich(matmul(dagger(u), r, u), entries[k][1], delta)
    u = expm(-1j * h * entries[0][0])
    return matmul(dagger(u), r, u)


@pytest.mark.parametrize("entries", [
    [(0.0, (0.0, math.inf)), (1.0, (-1.0, 3.0))],
    [(0.2, (-math.inf, 1.0)), (0.9, (-2.0, 2.0)), (1.5, (0.0, math.inf))],
])
def test_sqrt_povm(setup, entries):
    g, ham, rho = setup
    delta = 2.0
    ref = naive_sqrt_povm(entries, naive_hamiltonian(1.5), delta)
    got = sqrt_povm_sequential(_spec(entries), ham, delta).matrix
    assert np.max(np.abs(got - ref)) < TOL
    ref_p = trace(matmul(naive_state(), ref)).real * DX
    assert abs(sqrt_povm_probability(rho, _spec(entries), ham, delta) - ref_p) < TOL


def test_fine_grained_probability(setup):
    g, ham, rho = setup
    h = naive_hamiltonian(1.5)
    width = 2.0
    u1, u2 = (-2.0, 4.0), (0.0, math.inf)
    total = 0.0
    # cells of width 2 anchored at the origin
    for c in range(-2, 2):
        cell = (max(c * width, u1[0]), min((c + 1) * width, u1[1]))
        if cell[1] <= cell[0]:
            continue
        c_op = naive_class_operator([(0.0, cell), (1.0, u2)], h)
        total += trace(matmul(c_op, naive_state(), dagger(c_op))).real * DX
    got = fine_grained_probability(rho, _spec([(0.0, u1), (1.0, u2)]), ham, width)
    assert abs(got - total) < TOL


def test_interference_term(setup):
    g, ham, rho = setup
    h = naive_hamiltonian(1.5)
    x1, width = 0.0, 2.0
    right = naive_class_operator([(0.0, (x1, x1 + width)), (1.0, (-1.0, 3.0))], h)
    left = naive_class_operator([(0.0, (x1 - width, x1)), (1.0, (-1.0, 3.0))], h)
    ref = trace(matmul(right, naive_state(), dagger(left))) * DX
    got = interference_term(rho, x1, width, SampleSet.interval(-1.0, 3.0), 0.0, 1.0, ham)
    assert abs(got - ref) < TOL


def test_discrete_two_time_povm():
    rng = np.random.default_rng(9)
    d = 3
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = a + a.conj().T
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = b @ b.conj().T
    rho /= np.trace(rho).real
    projs = [np.diag(e).astype(complex) for e in np.eye(d)]
    u = expm(-1j * h * 0.6)
    for i in range(d):
        for j in range(d):
            # |<j|U|i>|^2 <i|rho|i>
            ref = abs(u[j, i]) ** 2 * rho[i, i].real
            assert abs(discrete_two_time_povm(rho, i, j, h, projs, 0.6) - ref) < TOL
