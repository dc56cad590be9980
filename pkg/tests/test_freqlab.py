import math

import numpy as np
import pytest
from scipy.linalg import expm

from seqprob.freqlab import (
    DeltaPolicy,
    EnsembleSpec,
    FrequencyPvm,
    FrequencyTrace,
    bernoulli_decay_slope,
    bernoulli_trace,
    bin_sets,
    binned_joint,
    condmarg_distinction,
    count_operators,
    decoherence_ratio,
    default_burn,
    explicit_statistics,
    frequency_pvm,
    frequency_trace,
    mixture_ensemble_trace,
    nonconvergence_measure,
    run_ensemble,
    sample_sequential_run,
    sequential_effect,
    sequential_frequency_povm_overlap,
    trace_from_hits,
)
from seqprob.freeform import half_line_pair_quantities
from seqprob.qcore import DensityOperator, Grid, SampleSet, WaveFunction, free_hamiltonian, potential_hamiltonian
from seqprob.rng import block_generator
from seqprob.seqmeas import HistorySpec, PovmKind, sqrt_povm_probability

R = SampleSet.right_half(0.0)
UNIT = SampleSet.interval(0.0, 1.0)
OMEGA = SampleSet.omega()
PZ = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
PX = (0.5 * np.array([[1, 1], [1, 1]], dtype=complex), 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex))
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)

# --- traces ----------------------------------------------------------------------------


def test_constant_trace():
    tr = trace_from_hits(np.ones(50, dtype=bool))
    assert np.all(tr.nu == 1.0)
    assert nonconvergence_measure(tr) == 0.0


def test_alternating_trace_envelope():
    tr = trace_from_hits(np.arange(1000) % 2 == 0)
    n = np.arange(1, 1001)
    assert np.all(np.abs(tr.nu - 0.5) <= 1 / (2 * n) + 1e-15)
    assert nonconvergence_measure(tr) <= 1 / (2 * (default_burn(1000) + 1)) + 1e-15


def test_trace_invariants_and_validation():
    tr = bernoulli_trace(0.3, 500, seed=2)
    nu = tr.nu
    assert np.all((nu >= 0) & (nu <= 1))
    assert np.all(np.abs(np.diff(nu)) <= 1 / np.arange(2, 501) + 1e-15)
    with pytest.raises(ValueError):
        FrequencyTrace(np.array([0, 2]), 2)
    with pytest.raises(ValueError):
        trace_from_hits([])
    with pytest.raises(ValueError):
        nonconvergence_measure(tr, 250)
    assert tr.to_csv(100).splitlines()[0] == "n,nu"


def test_frequency_trace_of_slot_events():
    out = np.array([[0.5, 0.5], [-1.0, 0.5], [0.5, 3.0], [2.0, 0.1]])
    tr = frequency_trace(out, [R, UNIT])
    assert list(tr.counts) == [1, 1, 1, 2]
    disc = frequency_trace(np.array([[0, 1], [1, 1], [0, 0]]), [(0,), (1,)])
    assert list(disc.counts) == [1, 1, 1]
    with pytest.raises(ValueError):
        frequency_trace(out, [R])


def test_bernoulli_deviation_decays_as_inverse_root():
    s = bernoulli_decay_slope(0.3, seed=3)
    assert abs(s.slope + 0.5) < 0.1


def test_nonconvergence_of_bernoulli_shrinks():
    eps = [np.mean([nonconvergence_measure(bernoulli_trace(0.4, n, seed=s)) for s in range(20)])
           for n in (1000, 16000)]
    # n^(-1/2) scaling: a factor 16 in n gives roughly a factor 4
    assert 2.5 < eps[0] / eps[1] < 6.5


# --- sequential sampler -------------------------------------------------------------------


@pytest.fixture(scope="module")
def free256():
    g = Grid.centered(256, 12.8)
    h = free_hamiltonian(g, 1.0)
    psi = WaveFunction.gaussian(g, 0.0, 1.0)
    return g, h, psi, DensityOperator.from_wavefunction(psi)


def test_all_omega_history_always_in(free256):
    g, h, psi, _ = free256
    hist = HistorySpec.of((0.0, OMEGA), (1.0, OMEGA))
    res = run_ensemble(EnsembleSpec(200, 1, hist, DeltaPolicy.fixed(0.3)), psi, h)
    assert frequency_trace(res.readings, hist.sets).hits == 200


def test_single_run_uses_mixed_state_components(free256):
    g, h, psi, rho = free256
    hist = HistorySpec.of((0.0, R), (1.0, UNIT))
    x = sample_sequential_run(rho, hist, h, 0.3, block_generator(5, 0))
    assert len(x) == 2 and all(math.isfinite(v) for v in x)
    with pytest.raises(ValueError):
        sample_sequential_run(psi, hist, h, 0.05, block_generator(5, 0))


def test_sampler_matches_sequential_probability(free256):
    g, h, psi, rho = free256
    delta = 0.2
    hist = HistorySpec.of((0.0, R), (1.0, UNIT))
    n = 100000
    res = run_ensemble(EnsembleSpec(n, 9, hist, DeltaPolicy.fixed(delta)), psi, h)
    p = sqrt_povm_probability(rho, hist, h, delta)
    nu = res.trace(hist.sets).nu[-1]
    assert abs(nu - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_sampler_joint_law_total_variation(free256):
    g, h, psi, rho = free256
    delta = 0.2
    edges = [np.array([-1.0, 0.0, 1.0])] * 2
    n = 100000
    hist = HistorySpec.of((0.0, OMEGA), (1.0, OMEGA))
    res = run_ensemble(EnsembleSpec(n, 10, hist, DeltaPolicy.fixed(delta)), psi, h)
    emp = binned_joint(res.readings, edges)
    cells = bin_sets(edges[0])
    exact = np.array([[sqrt_povm_probability(rho, HistorySpec.of((0.0, a), (1.0, b)), h, delta)
                       for b in cells] for a in cells])
    assert exact.sum() == pytest.approx(1.0, abs=1e-6)
    assert 0.5 * np.abs(emp - exact).sum() < 0.02


def test_commuting_sampler_matches_product_chain():
    # with a pure potential the readings are the same Born draw plus independent noise
    g = Grid.centered(256, 12.8)
    h = potential_hamiltonian(g, lambda x: 0.2 * x**2)
    psi = WaveFunction.gaussian(g, 0.3, 1.0)
    rho = DensityOperator.from_wavefunction(psi)
    hist = HistorySpec.of((0.0, R), (0.7, UNIT))
    n = 40000
    res = run_ensemble(EnsembleSpec(n, 4, hist, DeltaPolicy.fixed(0.3)), psi, h)
    p = sqrt_povm_probability(rho, hist, h, 0.3)
    assert abs(res.trace(hist.sets).nu[-1] - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_ensemble_independent_of_thread_count(free256):
    g, h, psi, _ = free256
    spec = EnsembleSpec(10000, 3, HistorySpec.of((0.0, R), (1.0, UNIT)), DeltaPolicy.fixed(0.25))
    a = run_ensemble(spec, psi, h, threads=1).readings
    b = run_ensemble(spec, psi, h, threads=3).readings
    assert np.array_equal(a, b)


# --- resolution mixtures ----------------------------------------------------------------


def test_delta_policy_validation_and_blocks():
    with pytest.raises(ValueError):
        DeltaPolicy.mixture([0.1, -0.2])
    with pytest.raises(ValueError):
        DeltaPolicy.mixture([0.1, 0.2], weights=[0.5, 0.6])
    with pytest.raises(ValueError):
        DeltaPolicy("fixed", (0.1, 0.2))
    idx = DeltaPolicy.mixture([0.1, 0.2], block=3, growth=2.0).assign(21, 0)
    assert list(idx) == [0] * 3 + [1] * 6 + [0] * 12
    iid = DeltaPolicy.mixture([0.1, 0.2], weights=[0.25, 0.75]).assign(20000, 1)
    assert abs(iid.mean() - 0.75) < 0.02


def test_degenerate_mixture_is_fixed_resolution(free256):
    g, h, psi, _ = free256
    hist = HistorySpec.of((0.0, R), (1.0, UNIT))
    a = mixture_ensemble_trace(EnsembleSpec(3000, 2, hist, DeltaPolicy.mixture([0.25], block=100)), psi, h)
    b = mixture_ensemble_trace(EnsembleSpec(3000, 2, hist, DeltaPolicy.fixed(0.25)), psi, h)
    assert np.array_equal(a.counts, b.counts)


@pytest.fixture(scope="module")
def mixture_run():
    g = Grid.centered(1024, 12.8)
    h = free_hamiltonian(g, 1.0)
    psi = WaveFunction.gaussian(g, 0.0, 1.0)
    hist = HistorySpec.of((0.0, R), (1.0, UNIT))
    policy = DeltaPolicy.mixture([0.05, 0.2], block=1000)
    res = run_ensemble(EnsembleSpec(40000, 6, hist, policy), psi, h)
    return g, h, psi, hist, res


def test_mixture_single_time_marginal_is_born(mixture_run):
    *_, res = mixture_run
    n = res.readings.shape[0]
    nu = frequency_trace(res.readings[:, :1], [R]).nu[-1]
    assert abs(nu - 0.5) < 4 * math.sqrt(0.25 / n)


def test_mixture_sub_ensembles_follow_their_resolution(mixture_run):
    g, h, psi, hist, res = mixture_run
    rho = DensityOperator.from_wavefunction(psi)
    for j, d in enumerate(res.deltas):
        sel = res.delta_index == j
        p = sqrt_povm_probability(rho, hist, h, d)
        nu = frequency_trace(res.readings[sel], hist.sets).nu[-1]
        assert abs(nu - p) < 4 * math.sqrt(p * (1 - p) / sel.sum())


# --- decoherence ratio ----------------------------------------------------------------------


def test_decoherence_ratio_commuting_is_zero():
    g = Grid.centered(128, 12.8)
    h = potential_hamiltonian(g, lambda x: 0.3 * x**2)
    rho = DensityOperator.from_wavefunction(WaveFunction.gaussian(g, 0.5, 1.0, 0.3))
    r = decoherence_ratio(rho, HistorySpec.of((0.0, R), (1.0, UNIT)), h, PovmKind.sharp_grid(0.1))
    assert abs(r.ratio) < 1e-10
    assert r.n_complements == 3


def test_decoherence_ratio_coarse_slots_small():
    g = Grid.centered(256, 51.2)
    h = free_hamiltonian(g, 1.0)
    rho = DensityOperator.from_wavefunction(WaveFunction.gaussian(g, 0.0, 1.0))
    hist = HistorySpec.of((0.0, SampleSet.interval(-10, 10)), (1.0, SampleSet.interval(-15, 15)))
    assert abs(decoherence_ratio(rho, hist, h, PovmKind.sharp_grid(0.4)).ratio) < 0.05


def test_decoherence_ratio_rejects_null_history():
    g = Grid.centered(64, 12.8)
    h = potential_hamiltonian(g, lambda x: 0.0 * x)
    rho = DensityOperator.from_wavefunction(WaveFunction.box(g, 1.0, center=-3.0))
    with pytest.raises(ValueError):
        decoherence_ratio(rho, HistorySpec.of((0.0, SampleSet.interval(3, 5))), h, PovmKind.sharp_grid(0.4))


def test_decoherence_ratio_half_line_pair():
    g = Grid.centered(1024, 25.6)
    h = free_hamiltonian(g, 1.0)
    rho = DensityOperator.from_wavefunction(WaveFunction.box(g, 1.0))
    r = decoherence_ratio(rho, HistorySpec.of((0.0, R), (1.0, R)), h, PovmKind.sharp_grid(0.1))
    assert r.ratio == pytest.approx(half_line_pair_quantities(1.0).ratio, abs=0.05)


# --- frequency operators ----------------------------------------------------------------------


def test_frequency_pvm_eigenstate():
    mean, var = FrequencyPvm(10, PZ[0]).statistics([1.0, 0.0])
    assert mean == pytest.approx(1.0, abs=1e-15) and var == pytest.approx(0.0, abs=1e-15)


def test_frequency_pvm_binomial_statistics():
    psi = [math.sqrt(0.3), math.sqrt(0.7)]
    mean, var = FrequencyPvm(20, PZ[0]).statistics(psi)
    assert abs(mean - 0.3) < 1e-12
    assert abs(var - 0.0105) < 1e-12


def test_frequency_pvm_explicit_matches_combinatorial():
    psi = [math.sqrt(0.3), math.sqrt(0.7)]
    pvm = FrequencyPvm(8, PZ[0])
    m_c, v_c = pvm.statistics(psi)
    m_e, v_e = explicit_statistics(pvm, psi)
    assert abs(m_c - m_e) < 1e-12 and abs(v_c - v_e) < 1e-12


def test_frequency_pvm_orthogonal_and_complete():
    mats = FrequencyPvm(6, PZ[0]).matrices()
    for a in range(7):
        for b in range(7):
            if a != b:
                assert np.max(np.abs(mats[a] @ mats[b])) == 0.0
    assert np.max(np.abs(sum(mats) - np.eye(64))) < 1e-12
    assert np.array_equal(frequency_pvm(6, PZ[0], 2, explicit=True), mats[2])


def test_frequency_pvm_validation():
    with pytest.raises(ValueError):
        FrequencyPvm(4, 0.5 * np.eye(2))
    with pytest.raises(ValueError):
        FrequencyPvm(21, PZ[0])
    with pytest.raises(ValueError):
        count_operators(11, PZ[0])
    with pytest.raises(ValueError):
        frequency_pvm(4, PZ[0], 5)


def test_sequential_overlap_commuting_vanishes():
    k = sequential_effect(PZ, SZ, math.pi / 4, 0, 0)
    assert sequential_frequency_povm_overlap(6, k, 2, 3) < 1e-10


def test_sequential_overlap_rabi():
    k = sequential_effect(PZ, SX, math.pi / 4, 0, 0)
    # K = P cos^2(t) P: a non-idempotent effect
    assert np.allclose(k, 0.5 * PZ[0], atol=1e-15)
    assert sequential_frequency_povm_overlap(6, k, 2, 3) > 1e-2
    with pytest.raises(ValueError):
        sequential_frequency_povm_overlap(6, k, 2, 2)


def test_sequential_overlap_persists_with_copies():
    k = sequential_effect(PZ, SX, math.pi / 4, 0, 0)
    small = sequential_frequency_povm_overlap(4, k, 1, 2)
    large = sequential_frequency_povm_overlap(8, k, 2, 4)
    assert large >= small


# --- conditional marginals ----------------------------------------------------------------


def test_condmarg_commuting_equal():
    rho = np.array([[0.6, 0.2], [0.2, 0.4]], dtype=complex)
    for j in (0, 1):
        c = condmarg_distinction(rho, PZ, PZ, SZ, 0.7, (j,))
        assert c.standard == pytest.approx(c.hypothesis, abs=1e-12)


def test_condmarg_stern_gerlach():
    zero = np.zeros((2, 2))
    vals = [condmarg_distinction(PZ[0], PX, PZ, zero, 0.0, (j,)) for j in (0, 1)]
    assert [v.standard for v in vals] == [0.5, 0.5]
    assert [v.hypothesis for v in vals] == [1.0, 0.0]


def test_condmarg_difference_is_interference_sum():
    rng = np.random.default_rng(12)
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = b @ b.conj().T
    rho /= np.trace(rho).real
    for j in (0, 1):
        c = condmarg_distinction(rho, PX, PZ, SX + 0.3 * SZ, 0.8, (j,))
        assert abs(c.standard - c.hypothesis) > 1e-3
        assert c.hypothesis - c.standard == pytest.approx(c.interference, abs=1e-12)
        # 2x2 algebra: the off-diagonal pair is 2 Re Tr(rho P+ Q P-)
        u = expm(-1j * (SX + 0.3 * SZ) * 0.8)
        q = u.conj().T @ PZ[j] @ u
        assert c.interference == pytest.approx(2 * np.trace(rho @ PX[0] @ q @ PX[1]).real, abs=1e-12)
