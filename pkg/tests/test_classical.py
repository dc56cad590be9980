import math

import numpy as np
import pytest
from scipy import stats

from seqprob.classical import (
    LocalHvModel,
    MarkovKernel,
    NearNode,
    bohm_multitime_probability,
    bohm_trajectories,
    bohm_velocity,
    equilibrium_chi2,
    heat_kernel,
    identity_kernel,
    kick_markov_kernels,
    kicked_flow_model,
    kicked_flow_process_probability,
    local_hv_two_time,
    markov_kick_model,
    markov_path_probability,
    pointer_two_time,
    reflection_kernel,
    sample_equilibrium,
    simulate_random_walk,
    system_only_two_time,
    unsharp_hv_check,
)
from seqprob.qcore import (
    Grid,
    LinearOperator,
    SampleSet,
    WaveFunction,
    evolve,
    free_hamiltonian,
    potential_hamiltonian,
)
from seqprob.seqmeas import HistorySpec

R = SampleSet.right_half(0.0)
UNIT = SampleSet.interval(0.0, 1.0)
OMEGA = SampleSet.omega()

# --- Markov path measures ------------------------------------------------------------------


@pytest.fixture(scope="module")
def walk_grid():
    return Grid.centered(512, 20.0)


def test_kernel_validation(walk_grid):
    n = walk_grid.n_points
    with pytest.raises(ValueError):
        MarkovKernel(walk_grid, -np.eye(n) / walk_grid.dx)
    with pytest.raises(ValueError):
        MarkovKernel(walk_grid, 2 * np.eye(n) / walk_grid.dx)
    k = heat_kernel(walk_grid, 0.5, 1.0)
    assert np.allclose(k.matrix.sum(axis=0) * walk_grid.dx, 1.0)
    with pytest.raises(ValueError):
        heat_kernel(walk_grid, 0.5, 0.0)


def test_full_sets_have_probability_one(walk_grid):
    rho0 = stats.norm(0, 1).pdf(walk_grid.x)
    ks = [heat_kernel(walk_grid, 0.5, 0.3), heat_kernel(walk_grid, 0.5, 0.7)]
    rho0 = rho0 / (rho0.sum() * walk_grid.dx)
    assert markov_path_probability(rho0, ks, [OMEGA, OMEGA]) == pytest.approx(1.0, abs=1e-12)


def test_identity_kernel_reduces_to_intersection(walk_grid):
    g = walk_grid
    rho0 = stats.norm(0, 1).pdf(g.x)
    rho0 = rho0 / (rho0.sum() * g.dx)
    sets = [SampleSet.interval(-1, 2), SampleSet.interval(0, 3), R]
    p = markov_path_probability(rho0, [identity_kernel(g)] * 3, sets)
    inter = sets[0].intersect(sets[1]).intersect(sets[2])
    assert p == pytest.approx(np.sum(rho0 * inter.contains(g.x)) * g.dx, abs=1e-12)


def test_markov_measure_compatible_at_every_slot(walk_grid):
    g = walk_grid
    rho0 = stats.norm(0.5, 1).pdf(g.x)
    rho0 = rho0 / (rho0.sum() * g.dx)
    k1, k2, k3 = heat_kernel(g, 0.5, 0.4), reflection_kernel(g, 0.3), heat_kernel(g, 0.5, 0.8)
    u = [SampleSet.interval(-1, 2), R, SampleSet.interval(-2, 1)]
    full = markov_path_probability(rho0, [k1, k2, k3], [u[0], u[1], OMEGA])
    assert full == pytest.approx(markov_path_probability(rho0, [k1, k2], u[:2]), abs=1e-9)
    mid = markov_path_probability(rho0, [k1, k2, k3], [u[0], OMEGA, u[2]])
    assert mid == pytest.approx(markov_path_probability(rho0, [k1, k2.compose(k3)], [u[0], u[2]]), abs=1e-9)
    first = markov_path_probability(rho0, [k1, k2, k3], [OMEGA, u[1], u[2]])
    assert first == pytest.approx(markov_path_probability(rho0, [k1.compose(k2), k3], u[1:]), abs=1e-9)


def test_heat_kernel_matches_random_walk(walk_grid):
    g = walk_grid
    rho0 = stats.norm(0, 1).pdf(g.x)
    rho0 = rho0 / (rho0.sum() * g.dx)
    p = markov_path_probability(rho0, [heat_kernel(g, 0.5, 0.5), heat_kernel(g, 0.5, 1.0)], [R, UNIT])
    rng = np.random.default_rng(21)
    n = 100000
    path = simulate_random_walk(rng.standard_normal(n), 0.5, [0.5, 1.0], rng)
    hit = R.contains(path[0]) & UNIT.contains(path[1])
    se = math.sqrt(p * (1 - p) / n)
    assert abs(hit.mean() - p) < 3 * se


def test_kick_kernels_match_random_walk_with_flips(walk_grid):
    g = walk_grid
    rho0 = stats.norm(0, 1).pdf(g.x)
    rho0 = rho0 / (rho0.sum() * g.dx)
    p = markov_path_probability(rho0, kick_markov_kernels(g, 0.5, 0.5, 1.5), [R, UNIT])
    rng = np.random.default_rng(4)
    n = 100000
    x0 = rng.standard_normal(n)
    first = simulate_random_walk(x0, 0.5, [0.5], rng)[0]
    flipped = np.where(rng.random(n) < 0.5, -first, first)
    second = simulate_random_walk(flipped, 0.5, [1.0], rng)[0]
    hit = R.contains(first) & UNIT.contains(second)
    assert abs(hit.mean() - p) < 3 * math.sqrt(p * (1 - p) / n)


# --- Bohmian mechanics -------------------------------------------------------------------------


def test_velocity_of_real_state_is_zero():
    g = Grid.centered(256, 12.8)
    psi = WaveFunction.gaussian(g, 0.0, 1.0)
    assert np.max(np.abs(bohm_velocity(psi, np.linspace(-3, 3, 31), 1.0))) < 1e-12


def test_velocity_of_plane_wave_factor():
    # fourth-order differences: error ~ k (k dx)^4 / 30
    g = Grid.centered(2048, 8.0)
    psi = WaveFunction.gaussian(g, 0.0, 1.0, k0=1.3)
    v = bohm_velocity(psi, np.linspace(-2, 2, 17), 2.0)
    assert np.max(np.abs(v - 1.3 / 2.0)) < 1e-8


def test_velocity_of_spreading_gaussian():
    g = Grid.centered(1024, 25.6)
    h = free_hamiltonian(g, 1.0)
    t, sigma = 1.0, 1.0
    psi = evolve(WaveFunction.gaussian(g, 0.0, sigma), h, t)
    tau = t / (2 * sigma**2)
    rate = tau * tau / t / (1 + tau * tau)  # sigma'(t) / sigma(t)
    xs = np.linspace(-3, 3, 13)
    assert np.max(np.abs(bohm_velocity(psi, xs, 1.0) - xs * rate)) < 1e-4


def test_velocity_refuses_nodes():
    g = Grid.centered(128, 12.8)
    psi = WaveFunction.box(g, 2.0)
    with pytest.raises(NearNode):
        bohm_velocity(psi, 5.0, 1.0)
    with pytest.raises(ValueError):
        bohm_velocity(psi, 0.0, 0.0)


def test_equilibrium_sampling_follows_density():
    g = Grid.centered(256, 12.8)
    psi = WaveFunction.gaussian(g, 0.5, 1.2)
    x = sample_equilibrium(psi, 10000, 8)
    assert stats.kstest(x, stats.norm(0.5, 1.2).cdf).pvalue > 0.01
    assert np.array_equal(x, sample_equilibrium(psi, 10000, 8))


def test_eigenstate_trajectories_are_static():
    g = Grid.centered(128, 12.8)
    h = potential_hamiltonian(g, lambda x: 0.5 * x**2)
    # the harmonic ground state on the free + potential Hamiltonian
    full = LinearOperator(g, free_hamiltonian(g, 1.0).matrix + h.matrix, hermitian=True)
    w, v = full.eig()
    ground = v[:, 0] * np.exp(-1j * np.angle(v[np.argmax(np.abs(v[:, 0])), 0]))
    psi = WaveFunction(g, ground.real.astype(complex)).normalize()
    ens = bohm_trajectories(psi, full, 1.0, [0.0, 1.0, 2.0], 200, 3)
    assert np.max(np.abs(ens.trajectories - ens.trajectories[0])) < 1e-8


@pytest.fixture(scope="module")
def gaussian_ensemble():
    g = Grid.centered(512, 25.6)
    h = free_hamiltonian(g, 1.0)
    psi = WaveFunction.gaussian(g, 0.0, 1.0)
    return h, bohm_trajectories(psi, h, 1.0, [0.0, 0.5, 1.0, 2.0], 4000, 17)


def test_gaussian_trajectories_scale_with_width(gaussian_ensemble):
    _, ens = gaussian_ensemble
    x0 = ens.trajectories[0]
    for t in (0.5, 1.0, 2.0):
        s = math.sqrt(1 + (t / 2) ** 2)
        assert np.max(np.abs(ens.positions_at(t) - x0 * s)) < 1e-4


def test_no_crossings_and_ordered_quantiles(gaussian_ensemble):
    h, ens = gaussian_ensemble
    assert ens.crossings() == 0
    assert ens.discarded == 0
    # the flow preserves quantiles, so the equiprobable-bin counts barely change with time
    s1, _ = equilibrium_chi2(ens, h, 1.0)
    s2, _ = equilibrium_chi2(ens, h, 2.0)
    assert s1 == pytest.approx(s2, rel=0.05)


def test_equivariance(gaussian_ensemble):
    h, ens = gaussian_ensemble
    for t in (0.5, 2.0):
        assert equilibrium_chi2(ens, h, t)[1] > 0.01


def test_bohm_path_measure_properties(gaussian_ensemble):
    _, ens = gaussian_ensemble
    assert bohm_multitime_probability(ens, HistorySpec.of((0.0, OMEGA), (2.0, OMEGA))).value == 1.0
    two = bohm_multitime_probability(ens, HistorySpec.of((0.0, R), (2.0, UNIT)))
    three = bohm_multitime_probability(ens, HistorySpec.of((0.0, R), (1.0, OMEGA), (2.0, UNIT)))
    assert two.value == three.value
    assert two.stderr == pytest.approx(math.sqrt(two.value * (1 - two.value) / ens.n))


def test_bohm_single_time_matches_born(gaussian_ensemble):
    _, ens = gaussian_ensemble
    est = bohm_multitime_probability(ens, HistorySpec.of((1.0, UNIT)))
    s = math.sqrt(1 + 0.25)
    born = stats.norm(0, s).cdf(1.0) - 0.5
    assert abs(est.value - born) < 4 * est.stderr


def test_trajectory_export(gaussian_ensemble):
    _, ens = gaussian_ensemble
    rows = list(ens.to_csv_rows(5))
    assert len(rows) == 4 and len(rows[0]) == 6
    summ = ens.summary()
    assert summ["n_kept"] == ens.n and summ["seed"] == 17
    with pytest.raises(ValueError):
        ens.positions_at(0.75)


# --- local hidden-variable models -----------------------------------------------------------------

HV = dict(sigma=1.0, mass=1.0, t1=0.5, t2=1.5)
LAW = stats.norm(0.0, 1.0)


def test_locality_probe_rejects_mislabelled_model():
    with pytest.raises(ValueError):
        LocalHvModel(lambda x0, q1, n1=None: x0, lambda x0, q1, n1=None: x0,
                     lambda x1, q1, q2, n2=None: x1 + q1, local=True)


def test_nonlocal_model_refused():
    with pytest.raises(ValueError):
        local_hv_two_time(kicked_flow_model(**HV, coupling=0.5), LAW, (R, UNIT))


def test_trivial_model_measures_intersection():
    ident = LocalHvModel(lambda x0, q1, n1=None: np.asarray(x0), lambda x0, q1, n1=None: np.asarray(x0),
                         lambda x1, q1, q2, n2=None: np.asarray(x1), local=True)
    u1, u2 = SampleSet.interval(-1, 1), SampleSet.interval(0, 2)
    assert local_hv_two_time(ident, LAW, (u1, u2)) == pytest.approx(LAW.cdf(1) - LAW.cdf(0), abs=1e-12)


def test_deterministic_factorisation_identity():
    model = kicked_flow_model(**HV)
    p_ptr = local_hv_two_time(model, LAW, (R, UNIT))
    p_sys = system_only_two_time(model, LAW, (R, UNIT))
    p_cf = kicked_flow_process_probability(1.0, 1.0, 0.5, 1.5, R, UNIT)
    assert abs(p_ptr - p_sys) < 1e-10
    assert abs(p_ptr - p_cf) < 1e-10


def test_deterministic_single_time_calibration():
    # the sign kick keeps the second-time marginal at the Born value
    model = kicked_flow_model(**HV)
    p = local_hv_two_time(model, LAW, (OMEGA, UNIT))
    s2 = math.sqrt(1 + (1.5 / 2) ** 2)
    assert p == pytest.approx(stats.norm(0, s2).cdf(1.0) - 0.5, abs=1e-12)


def test_markov_factorisation_identity():
    model = markov_kick_model(0.5, 0.5, 1.5)
    a = local_hv_two_time(model, LAW, (R, UNIT), method="mc", n_samples=100000, seed=11)
    b = system_only_two_time(model, LAW, (R, UNIT), method="mc", n_samples=100000, seed=12)
    assert abs(a.value - b.value) < 3 * math.hypot(a.stderr, b.stderr)
    g = Grid.centered(512, 20.0)
    p_grid = markov_path_probability(LAW.pdf(g.x), kick_markov_kernels(g, 0.5, 0.5, 1.5), [R, UNIT])
    assert abs(a.value - p_grid) < 3 * a.stderr


def test_markov_model_needs_mc():
    with pytest.raises(ValueError):
        local_hv_two_time(markov_kick_model(0.5, 0.5, 1.5), LAW, (R, UNIT))


def test_breaking_locality_breaks_identity():
    model = kicked_flow_model(**HV, coupling=0.5)
    gap = abs(pointer_two_time(model, LAW, (R, UNIT)) - system_only_two_time(model, LAW, (R, UNIT)))
    assert gap > 1e-2


def test_unsharp_defect_vanishes_with_resolution():
    model = kicked_flow_model(**HV)
    reps = [unsharp_hv_check(model, d, (R, UNIT), LAW) for d in (0.04, 0.02, 0.01)]
    assert reps[0].defect > reps[1].defect > reps[2].defect
    # O(delta) at most; c reported
    assert reps[2].defect < max(1.0, reps[2].c_measured) * 0.01
    assert reps[2].length == 1.0


def test_unsharp_far_separated_sets():
    model = kicked_flow_model(**HV)
    rep = unsharp_hv_check(model, 0.01, (SampleSet.interval(0, 1), SampleSet.interval(20, 21)), LAW)
    assert rep.defect < 1e-8
