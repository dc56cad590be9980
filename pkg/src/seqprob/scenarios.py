"""Named experiments: each returns data tables and checked assertions.

A scenario is a function ``(params, seed, threads) -> ScenarioResult``.  The
defaults of every scenario are JSON-compatible and double as the schema for
user configuration (unknown keys are rejected by the runner).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from . import designated as D
from .apparatus import (
    ApparatusState,
    CouplingSpec,
    identification_error,
    impulsive_total_state,
    pointer_joint_distribution,
    resolution_from_device,
    single_pointer_distribution,
)
from .classical import (
    bohm_multitime_probability,
    bohm_trajectories,
    equilibrium_chi2,
    kick_markov_kernels,
    kicked_flow_model,
    kicked_flow_process_probability,
    local_hv_two_time,
    markov_kick_model,
    markov_path_probability,
    pointer_two_time,
    system_only_two_time,
    unsharp_hv_check,
)
from .freeform import (
    NEUTRON_MASS,
    FreeParams,
    half_line_pair_quantities,
    box_half_line_probability,
    fringe_visibility,
    interference_period,
    measured_period,
    r2free_element,
    ralt_element,
    two_slit_density,
    two_slit_marginal,
    two_slit_state,
    uncertainty_budget,
)
from .freqlab import (
    DeltaPolicy,
    EnsembleSpec,
    FrequencyPvm,
    bernoulli_decay_slope,
    bernoulli_trace,
    condmarg_distinction,
    explicit_statistics,
    frequency_trace,
    nonconvergence_measure,
    run_ensemble,
    sequential_effect,
    sequential_frequency_povm_overlap,
)
from .qcore import DensityOperator, SampleSet, WaveFunction, free_hamiltonian, potential_hamiltonian
from .seqmeas import (
    HistorySpec,
    compatibility_check,
    fine_grained_probability,
    interference_sum,
    nogo_witness,
    sqrt_povm_probability,
    sqrt_povm_sequential,
)

Table = Tuple[List[str], List[list]]


@dataclass(frozen=True)
class Assertion:
    name: str
    value: float
    op: str
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _json_float(self.value), "op": self.op,
                "threshold": _json_float(self.threshold), "passed": bool(self.passed)}


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def check(name: str, value: float, op: str, threshold: float) -> Assertion:
    ops = {"<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
           ">=": lambda a, b: a >= b, "==": lambda a, b: a == b}
    value = float(value)
    return Assertion(name, value, op, float(threshold), bool(ops[op](value, float(threshold))))


@dataclass
class ScenarioResult:
    tables: Dict[str, Table] = field(default_factory=dict)
    assertions: List[Assertion] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    topic: str
    defaults: dict
    run: Callable[[dict, int, int], ScenarioResult]


# ---------------------------------------------------------------------------
# free half-line pair and the order-of-magnitude budget
# ---------------------------------------------------------------------------


def _half_line_pair(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    rs = np.unique(np.concatenate([np.geomspace(params["r_min"], params["r_max"], params["n_points"]),
                                   [params["r_min"], 1.0, params["r_max"]]]))
    rows = []
    for r in rs:
        q = half_line_pair_quantities(float(r))
        rows.append([float(r), q.p_pp, q.b, q.ratio, box_half_line_probability(float(r))])
    res.tables["ratio_curve"] = (["r", "p_pp", "b", "ratio", "p_pp_box_state"], rows)
    ratio = {row[0]: row[3] for row in rows}
    low = [row[3] for row in rows if row[0] <= 1.0]
    res.assertions.append(check("ratio_at_r_min", ratio[float(params["r_min"])], "<", 0.05))
    res.assertions.append(check("ratio_min_increment_up_to_1", float(np.min(np.diff(low))), ">", 0.0))
    res.assertions.append(check("ratio_at_r_max_minus_half", abs(ratio[float(params["r_max"])] - 0.5), "<", 0.05))
    lim = half_line_pair_quantities(float(params["r_limit"]))
    res.assertions.append(check("p_pp_small_r_minus_half", abs(lim.p_pp - 0.5), "<", 1e-4))
    b = params["budget"]
    bud = uncertainty_budget(b["length"], b["d"], b["v_z"], NEUTRON_MASS)
    res.tables["budget"] = (["quantity", "value"], [["pos_err", bud.pos_err], ["time_err", bud.time_err]])
    res.assertions.append(check("pos_err_minus_1e-2", abs(bud.pos_err - 1e-2), "==", 0.0))
    res.assertions.append(check("time_err_factor_from_1e-4",
                                max(bud.time_err / 1e-4, 1e-4 / bud.time_err), "<", 10.0))
    res.summary = {"ratio_r_min": ratio[float(params["r_min"])], "ratio_r_max": ratio[float(params["r_max"])],
                   "p_pp_limit": lim.p_pp, "time_err": bud.time_err}
    return res


# ---------------------------------------------------------------------------
# delta-sweep: resolution dependence and the interference identity
# ---------------------------------------------------------------------------


def _delta_sweep(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    grid, ham, psi, rho = D.gaussian_setup(params)
    h = D.two_time_history(params)
    d0 = float(params["delta"])
    isum = interference_sum(rho, h.sets[0], h.sets[1], h.times[0], h.times[1], ham, d0)
    known = {d0: isum.p_delta, 2 * d0: isum.p_2delta}
    rows = []
    for d in params["deltas"]:
        d = float(d)
        p = known.get(d)
        if p is None:
            p = fine_grained_probability(rho, h, ham, d)
        rows.append([d, p])
    res.tables["p_vs_delta"] = (["delta", "p_delta"], rows)
    rel = abs(isum.p_delta - isum.p_2delta) / isum.p_delta
    ps = [r[1] for r in rows]
    res.tables["interference"] = (["quantity", "value"], [
        ["p_delta", isum.p_delta], ["p_2delta", isum.p_2delta], ["interference_sum", isum.interference],
        ["identity_residual", isum.identity_residual], ["relative_sensitivity", rel],
        ["relative_spread", (max(ps) - min(ps)) / max(ps)]])
    res.assertions.append(check("relative_sensitivity", rel, ">", 0.1))
    res.assertions.append(check("interference_identity_residual", abs(isum.identity_residual), "<", 1e-8))
    res.summary = {"p_delta": isum.p_delta, "p_2delta": isum.p_2delta, "relative_sensitivity": rel}
    return res


# ---------------------------------------------------------------------------
# two-slit: closed-form densities, fringes and kernels
# ---------------------------------------------------------------------------


def _two_slit(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    m, t, s, ll = params["mass"], params["time"], params["sigma"], params["separation"]
    xs = np.linspace(-params["x_half_width"], params["x_half_width"], params["n_x"])
    fps = [FreeParams(m, t, float(d), sigma=s, separation=ll) for d in params["deltas"]]
    dens = [two_slit_density(xs, p) for p in fps]
    res.tables["density"] = (["x"] + [f"delta={p.delta!r}" for p in fps],
                             [[float(x)] + [float(v[i]) for v in dens] for i, x in enumerate(xs)])
    res.tables["fringes"] = (["delta", "period_formula", "period_measured", "visibility"],
                             [[p.delta, interference_period(p), measured_period(p), fringe_visibility(p)]
                              for p in fps])
    vis_min = fringe_visibility(fps[0])
    res.assertions.append(check("visibility_at_smallest_delta", vis_min, "<", 1e-3))

    # closed-form marginal versus the grid square-root POVM
    grid = D.build_grid(params["grid"])
    ham = free_hamiltonian(grid, m)
    rho = DensityOperator.from_wavefunction(
        WaveFunction.from_function(grid, lambda x: two_slit_state(x, s, ll)))
    ref = FreeParams(m, t, float(params["delta"]), sigma=s, separation=ll)
    rows, worst = [], 0.0
    for pair in params["grid_check_sets"]:
        u = D.build_set(pair)
        pg = sqrt_povm_probability(rho, HistorySpec.of((0.0, SampleSet.omega()), (t, u)), ham, ref.delta)
        pc = two_slit_marginal(u, ref)
        rows.append([str(u), pg, pc])
        worst = max(worst, abs(pg - pc))
    res.tables["marginal_check"] = (["set", "grid", "closed_form"], rows)
    res.assertions.append(check("two_slit_marginal_grid_error", worst, "<", 1e-6))

    # closed-form kernel versus the dense square-root POVM
    c = params["closed_form"]
    kg = D.build_grid(c["grid"])
    kh = free_hamiltonian(kg, c["mass"])
    u1, u2 = D.build_set(c["u1"]), D.build_set(c["u2"])
    r = sqrt_povm_sequential(HistorySpec.of((0.0, u1), (float(c["time"]), u2)), kh, c["delta"]).matrix
    fp = FreeParams(c["mass"], c["time"], c["delta"])
    rng = np.random.default_rng(c["seed"])
    idx = np.where(np.abs(kg.x) < c["pair_range"])[0]
    krows, kerr = [], 0.0
    for i, j in rng.choice(idx, size=(c["n_pairs"], 2)):
        xg = complex(r[i, j] / kg.dx)
        xa = ralt_element(kg.x[i], kg.x[j], u1, u2, fp)
        xb = r2free_element(kg.x[i], kg.x[j], u1, u2, fp)
        err = max(abs(xg - xa), abs(xg - xb))
        kerr = max(kerr, err)
        krows.append([float(kg.x[i]), float(kg.x[j]), xg.real, xg.imag, xa.real, xa.imag, xb.real, xb.imag, err])
    res.tables["kernel_check"] = (["x", "x_prime", "grid_re", "grid_im", "factorised_re", "factorised_im",
                                   "double_integral_re", "double_integral_im", "abs_error"], krows)
    res.assertions.append(check("closed_form_kernel_max_error", kerr, "<", 1e-4))
    res.summary = {"visibility_smallest_delta": vis_min, "kernel_max_error": kerr, "marginal_max_error": worst}
    return res


# ---------------------------------------------------------------------------
# compat-check: marginalisation, normalisation and no-go witnesses
# ---------------------------------------------------------------------------


def _compat_check(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    cfg = params["interference"]
    grid, ham, psi, rho = D.gaussian_setup(cfg)
    h = D.two_time_history(cfg)
    first = compatibility_check(rho, h, 0, ham, cfg["delta"])
    last = compatibility_check(rho, h, 1, ham, cfg["delta"])
    res.tables["compatibility"] = (["slot", "lhs", "rhs", "defect"],
                                   [[0, first.lhs, first.rhs, first.defect], [1, last.lhs, last.rhs, last.defect]])
    res.assertions.append(check("last_slot_defect", last.defect, "<", 1e-6))
    res.assertions.append(check("first_slot_defect_over_p", first.defect / first.rhs, ">", 0.01))

    nc = params["normalization"]
    ngrid = D.build_grid(nc["grid"])
    nham = free_hamiltonian(ngrid, nc["mass"])
    nrows = []
    for n in range(1, len(nc["times"]) + 1):
        hist = HistorySpec.of(*[(float(t), SampleSet.omega()) for t in nc["times"][:n]])
        r = sqrt_povm_sequential(hist, nham, nc["delta"]).matrix
        err = float(np.max(np.abs(r - np.eye(ngrid.n_points))))
        nrows.append([n, err])
        res.assertions.append(check(f"normalization_error_n{n}", err, "<", 1e-6))
    res.tables["normalization"] = (["n_slots", "max_abs_error"], nrows)

    gc = params["nogo"]
    ggrid = D.build_grid(gc["grid"])
    u1, u2 = D.build_set(gc["u1"]), D.build_set(gc["u2"])
    free = nogo_witness(free_hamiltonian(ggrid, gc["mass"]), gc["delta"], u1, u2, gc["t1"], gc["t2"])
    ctrl = nogo_witness(potential_hamiltonian(ggrid, lambda x: 0.5 * x * x), gc["delta"], u1, u2, gc["t1"], gc["t2"])
    res.tables["nogo"] = (["hamiltonian", "commutator_norm", "marginal_nonidempotency"],
                          [["free", free.commutator_norm, free.marginal_nonidempotency],
                           ["potential", ctrl.commutator_norm, ctrl.marginal_nonidempotency]])
    res.assertions += [
        check("nogo_free_commutator", free.commutator_norm, ">", 0.1),
        check("nogo_free_marginal", free.marginal_nonidempotency, ">", 0.01),
        check("nogo_control_commutator", ctrl.commutator_norm, "<", 1e-9),
        check("nogo_control_marginal", ctrl.marginal_nonidempotency, "<", 1e-9),
    ]
    res.summary = {"first_slot_defect": first.defect, "last_slot_defect": last.defect}
    return res


# ---------------------------------------------------------------------------
# bohm-compare: equivariance and the two-time comparison
# ---------------------------------------------------------------------------


def _bohm_compare(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    cat = params["cat"]
    cgrid = D.build_grid(cat["grid"])
    cham = free_hamiltonian(cgrid, 1.0)
    cpsi = D.cat_state(cgrid, cat["offset"], cat["momentum"])
    ens = bohm_trajectories(cpsi, cham, 1.0, cat["times"], params["n_samples"], seed)
    crow = []
    for t in cat["checkpoints"]:
        stat, p = equilibrium_chi2(ens, cham, float(t))
        crow.append([float(t), stat, p])
        res.assertions.append(check(f"chi2_p_value_t={float(t)!r}", p, ">", 0.01))
    res.tables["equivariance"] = (["t", "chi2", "p_value"], crow)
    res.tables["cat_trajectories"] = (["t"] + [f"traj_{i}" for i in range(min(ens.n, params["export_trajectories"]))],
                                      [list(map(float, r)) for r in ens.to_csv_rows(params["export_trajectories"])])

    cfg = params["interference"]
    grid, ham, psi, rho = D.gaussian_setup(cfg)
    h = D.two_time_history(cfg)
    mid = 0.5 * (h.times[0] + h.times[1])
    gens = bohm_trajectories(psi, ham, cfg["mass"], [h.times[0], mid, h.times[1]], params["n_samples"], seed + 1)
    pb = bohm_multitime_probability(gens, h)
    pint = bohm_multitime_probability(gens, HistorySpec.of(h.entries[0], (mid, SampleSet.omega()), h.entries[1]))
    pq = sqrt_povm_probability(rho, h, ham, cfg["delta"])
    z = abs(pb.value - pq) / max(pb.stderr, 1e-300)
    res.tables["two_time"] = (["quantity", "value"], [
        ["bohm", pb.value], ["bohm_stderr", pb.stderr], ["bohm_interior_omega", pint.value],
        ["quantum_p_delta", pq], ["z", z], ["discarded", gens.discarded], ["crossings", gens.crossings()]])
    res.assertions.append(check("bohm_vs_quantum_standard_errors", z, ">", 5.0))
    res.assertions.append(check("interior_slot_difference_over_3se", abs(pint.value - pb.value) / (3 * pb.stderr),
                                "<=", 1.0))
    res.summary = {"bohm": pb.value, "quantum": pq, "z": z, "discarded": ens.discarded + gens.discarded}
    return res


# ---------------------------------------------------------------------------
# hv-locality: factorisation identity of local models
# ---------------------------------------------------------------------------


def _hv_locality(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    s, m, t1, t2 = params["sigma"], params["mass"], params["t1"], params["t2"]
    u1, u2 = D.build_set(params["u1"]), D.build_set(params["u2"])
    law = stats.norm(0.0, s)
    det = kicked_flow_model(s, m, t1, t2)
    p_ptr = local_hv_two_time(det, law, (u1, u2))
    p_sys = system_only_two_time(det, law, (u1, u2))
    p_cf = kicked_flow_process_probability(s, m, t1, t2, u1, u2)
    res.assertions.append(check("deterministic_identity_error", max(abs(p_ptr - p_sys), abs(p_ptr - p_cf)), "<", 1e-10))

    n = params["n_samples"]
    mk = markov_kick_model(params["diffusion"], t1, t2)
    a = local_hv_two_time(mk, law, (u1, u2), method="mc", n_samples=n, seed=seed)
    b = system_only_two_time(mk, law, (u1, u2), method="mc", n_samples=n, seed=seed + 1)
    se = math.hypot(a.stderr, b.stderr)
    kgrid = D.build_grid(params["markov_grid"])
    p_grid = markov_path_probability(law.pdf(kgrid.x), kick_markov_kernels(kgrid, params["diffusion"], t1, t2),
                                     [u1, u2])
    res.assertions.append(check("markov_identity_in_standard_errors", abs(a.value - b.value) / se, "<", 3.0))

    broken = kicked_flow_model(s, m, t1, t2, coupling=params["coupling"])
    q_ptr = pointer_two_time(broken, law, (u1, u2))
    q_sys = system_only_two_time(broken, law, (u1, u2))
    res.assertions.append(check("nonlocal_identity_violation", abs(q_ptr - q_sys), ">", 1e-2))
    rep = unsharp_hv_check(det, params["unsharp_delta"], (u1, u2), law)
    res.tables["identity"] = (["model", "pointer", "system_process", "reference"], [
        ["kicked_flow", p_ptr, p_sys, p_cf],
        ["markov_kick_mc", a.value, b.value, p_grid],
        ["kicked_flow_nonlocal", q_ptr, q_sys, float("nan")],
        ["kicked_flow_unsharp", rep.p_unsharp, rep.p_sharp, rep.defect]])
    res.summary = {"deterministic": p_ptr, "markov_pointer": a.value, "markov_system": b.value,
                   "nonlocal_gap": abs(q_ptr - q_sys), "unsharp_defect": rep.defect}
    return res


# ---------------------------------------------------------------------------
# freq-convergence: Bernoulli control and the resolution-mixture ensemble
# ---------------------------------------------------------------------------


def _freq_convergence(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    slope = bernoulli_decay_slope(params["bernoulli_p"], seed=seed)
    res.tables["bernoulli_decay"] = (["n", "rms_error"], [[int(n), float(e)] for n, e in zip(slope.checkpoints,
                                                                                             slope.rms_error)])
    res.assertions.append(check("bernoulli_slope_minus_half", abs(slope.slope + 0.5), "<", 0.1))

    grid, ham, psi, rho = D.gaussian_setup(params)
    h = D.two_time_history(params)
    policy = DeltaPolicy.mixture(params["deltas"], block=params["block"], growth=params["growth"])
    ens = run_ensemble(EnsembleSpec(params["n_runs"], seed, h, policy), psi, ham, threads)
    tr = ens.trace(h.sets)
    eps_mix = nonconvergence_measure(tr)
    ctrl = bernoulli_trace(float(tr.nu[-1]), params["n_runs"], seed)
    eps_ctrl = nonconvergence_measure(ctrl)
    stride = params["trace_stride"]
    nu_m, nu_c = tr.nu, ctrl.nu
    res.tables["trace"] = (["n", "nu_mixture", "nu_control"],
                           [[i + 1, float(nu_m[i]), float(nu_c[i])] for i in range(stride - 1, tr.n_runs, stride)])
    res.assertions.append(check("mixture_over_control_nonconvergence", eps_mix / eps_ctrl, ">", 3.0))
    single = frequency_trace(ens.readings[:, :1], [h.sets[0]])
    born = 0.5
    sd = math.sqrt(born * (1 - born) / params["n_runs"])
    res.assertions.append(check("single_time_marginal_in_sigmas", abs(single.nu[-1] - born) / sd, "<", 4.0))
    per = []
    for j, d in enumerate(policy.deltas):
        sel = ens.delta_index == j
        per.append([d, int(sel.sum()), float(frequency_trace(ens.readings[sel], h.sets).nu[-1])])
    res.tables["per_delta"] = (["delta", "runs", "nu"], per)
    res.summary = {"slope": slope.slope, "eps_mixture": eps_mix, "eps_control": eps_ctrl,
                   "single_time": float(single.nu[-1])}
    return res


# ---------------------------------------------------------------------------
# apparatus-check: pointer statistics against the square-root POVM
# ---------------------------------------------------------------------------


def _apparatus_check(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    grid, ham, psi, rho = D.gaussian_setup(params)
    c = CouplingSpec(params["t1"], params["t2"])
    sets = D.coarse_sets(params["edges"])
    rows, fits = [], []
    for sk in params["sigma_k"]:
        app = ApparatusState.gaussian(psi, sk, params["period"], params["n_k"])
        err, pt, qt = identification_error(app, ham, c, sets, sets)
        for i, a in enumerate(sets):
            for j, b in enumerate(sets):
                rows.append([sk, str(a), str(b), pt[i, j], qt[i, j]])
        st = impulsive_total_state(app, ham, c)
        res.assertions.append(check(f"identification_error_sigma_k={sk!r}", err, "<", 1e-4))
        res.assertions.append(check(f"norm_error_sigma_k={sk!r}", abs(st.norm - 1.0), "<", 1e-6))
        marg = max(abs(pointer_joint_distribution(st, a, SampleSet.omega())
                       - single_pointer_distribution(app, ham, c.t1, a)) for a in sets)
        res.assertions.append(check(f"pointer2_marginal_error_sigma_k={sk!r}", marg, "<", 1e-6))
        fit = resolution_from_device(app)
        fits.append([sk, 1.0 / (2 * sk), fit.delta, fit.delta_stderr, fit.fit_residual])
        res.assertions.append(check(f"resolution_fit_residual_sigma_k={sk!r}", fit.fit_residual, "<", 0.05))
    res.tables["pointer_vs_povm"] = (["sigma_k", "U1", "U2", "pointer", "povm"], rows)
    res.tables["resolution"] = (["sigma_k", "delta_nominal", "delta_fit", "delta_stderr", "fit_residual"], fits)
    res.summary = {"resolution": fits}
    return res


# ---------------------------------------------------------------------------
# frequency-operator: frequency PVMs, sequential overlaps, conditional marginals
# ---------------------------------------------------------------------------


def _frequency_operator(params: dict, seed: int, threads: int) -> ScenarioResult:
    res = ScenarioResult()
    pz, px = D.qubit_projectors()
    p = params["p"]
    psi = np.array([math.sqrt(p), math.sqrt(1 - p)])
    big = FrequencyPvm(params["n_combinatorial"], pz[0])
    mean, var = big.statistics(psi)
    n = params["n_combinatorial"]
    res.assertions.append(check("combinatorial_mean_error", abs(mean - p), "<", 1e-12))
    res.assertions.append(check("combinatorial_variance_error", abs(var - p * (1 - p) / n), "<", 1e-12))
    small = FrequencyPvm(params["n_explicit"], pz[0])
    m_c, v_c = small.statistics(psi)
    m_e, v_e = explicit_statistics(small, psi)
    res.assertions.append(check("explicit_vs_combinatorial", max(abs(m_c - m_e), abs(v_c - v_e)), "<", 1e-12))

    rabi = params["rabi"]
    k_rabi = sequential_effect(pz, D.PAULI_X, rabi["time"], 0, 0)
    k_ctrl = sequential_effect(pz, D.PAULI_Z, rabi["time"], 0, 0)
    a, b = rabi["counts"]
    ov = sequential_frequency_povm_overlap(rabi["copies"], k_rabi, a, b)
    ov_c = sequential_frequency_povm_overlap(rabi["copies"], k_ctrl, a, b)
    res.assertions.append(check("rabi_overlap", ov, ">", 1e-2))
    res.assertions.append(check("commuting_overlap", ov_c, "<", 1e-10))
    scaling = []
    for copies in params["scaling_copies"]:
        fa, fb = params["scaling_fractions"]
        scaling.append([copies, sequential_frequency_povm_overlap(copies, k_rabi, int(round(fa * copies)),
                                                                   int(round(fb * copies)))])

    rho = pz[0]
    zero = np.zeros((2, 2))
    cm = [condmarg_distinction(rho, px, pz, zero, 0.0, (j,)) for j in (0, 1)]
    res.assertions.append(check("condmarg_standard_error",
                                max(abs(cm[0].standard - 0.5), abs(cm[1].standard - 0.5)), "==", 0.0))
    res.assertions.append(check("condmarg_hypothesis_error",
                                max(abs(cm[0].hypothesis - 1.0), abs(cm[1].hypothesis - 0.0)), "==", 0.0))
    res.tables["statistics"] = (["quantity", "value"], [
        ["mean_combinatorial", mean], ["variance_combinatorial", var], ["mean_explicit_n8", m_e],
        ["variance_explicit_n8", v_e], ["overlap_rabi", ov], ["overlap_commuting", ov_c]])
    res.tables["overlap_scaling"] = (["copies", "overlap"], scaling)
    res.tables["condmarg"] = (["outcome", "standard", "hypothesis", "interference"],
                              [[j, c.standard, c.hypothesis, c.interference] for j, c in enumerate(cm)])
    res.summary = {"overlap_rabi": ov, "overlap_scaling": scaling}
    return res


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _with(base: dict, **extra) -> dict:
    out = copy.deepcopy(base)
    out.update(extra)
    return out


SCENARIOS: Dict[str, Scenario] = {s.name: s for s in [
    Scenario("appendix-d", "Half-line pair ratio curve b/p++ and the neutron order-of-magnitude budget",
             "free half-line pair; apparatus budget",
             {"r_min": 0.01, "r_max": 10.0, "n_points": 31, "r_limit": 1e-8, "budget": dict(D.NEUTRON_BUDGET)},
             _half_line_pair),
    Scenario("delta-sweep", "Fine-grained two-time probability versus resolution and the interference identity",
             "resolution dependence of sequential probabilities",
             _with(D.SENSITIVITY, deltas=[0.05, 0.1, 0.2]), _delta_sweep),
    Scenario("two-slit", "Two-slit second-time density, fringes, and closed-form kernels against the grid",
             "free-particle closed forms; two-slit marginal",
             _with(D.TWO_SLIT, deltas=[0.1, math.sqrt(5.0), 100.0], x_half_width=40.0, n_x=801,
                   grid_check_sets=[[None, None], [0.0, 5.0], [-3.0, 3.0], [2.0, None]],
                   closed_form=copy.deepcopy(D.CLOSED_FORM)),
             _two_slit),
    Scenario("compat-check", "Marginalisation defects, POVM normalisation and joint-POVM no-go witnesses",
             "compatibility conditions; normalisation; no-go",
             {"interference": copy.deepcopy(D.INTERFERENCE), "normalization": copy.deepcopy(D.NORMALIZATION),
              "nogo": copy.deepcopy(D.NOGO)}, _compat_check),
    Scenario("bohm-compare", "Bohmian equivariance and Bohmian versus quantum two-time probabilities",
             "Bohmian trajectories",
             _with(D.BOHM, interference=copy.deepcopy(D.INTERFERENCE), export_trajectories=200), _bohm_compare),
    Scenario("hv-locality", "Factorisation identity of local hidden-variable measurement models",
             "local hidden variables",
             _with(D.HIDDEN_VARIABLES, markov_grid={"n_points": 512, "half_width": 20.0}, unsharp_delta=0.01),
             _hv_locality),
    Scenario("freq-convergence", "Relative-frequency convergence: Bernoulli control and resolution mixture",
             "relative frequencies; non-convergence",
             _with(D.FREQUENCY, trace_stride=100), _freq_convergence),
    Scenario("apparatus-check", "Two-pointer impulsive device against the square-root POVM",
             "measuring-device model", copy.deepcopy(D.APPARATUS), _apparatus_check),
    Scenario("frequency-operator", "Frequency PVMs, sequential frequency overlaps and conditional marginals",
             "frequency operators; conditional marginals",
             {"p": 0.3, "n_combinatorial": 20, "n_explicit": 8, "rabi": copy.deepcopy(D.RABI),
              "scaling_copies": [4, 8], "scaling_fractions": [0.25, 0.5]}, _frequency_operator),
]}


def merged_params(name: str, overrides: dict) -> dict:
    """Scenario defaults updated recursively with ``overrides``."""
    def merge(base, upd):
        out = copy.deepcopy(base)
        for k, v in upd.items():
            if isinstance(v, dict) and isinstance(out.get(k), dict):
                out[k] = merge(out[k], v)
            else:
                out[k] = copy.deepcopy(v)
        return out
    return merge(SCENARIOS[name].defaults, overrides or {})


def value_schema(v) -> dict:
    """JSON schema accepting values shaped like the default ``v``."""
    if isinstance(v, bool):
        return {"type": "boolean"}
    if isinstance(v, int):
        return {"type": "integer"}
    if isinstance(v, float):
        return {"type": "number"}
    if v is None:
        return {"type": ["number", "null"]}
    if isinstance(v, str):
        return {"type": "string"}
    if isinstance(v, list):
        if v and all(isinstance(e, list) for e in v):
            return {"type": "array", "items": {"type": "array", "items": {"type": ["number", "null"]}}}
        return {"type": "array", "items": {"type": ["number", "null"]}}
    if isinstance(v, dict):
        return {"type": "object", "additionalProperties": False,
                "properties": {k: value_schema(e) for k, e in v.items()}}
    raise TypeError(f"unsupported default {v!r}")


def config_schema() -> dict:
    """Published schema of the run configuration file."""
    branches = [{"if": {"properties": {"scenario": {"const": s.name}}},
                 "then": {"properties": {"params": value_schema(s.defaults)}}} for s in SCENARIOS.values()]
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "seqprob run configuration",
        "type": "object",
        "additionalProperties": False,
        "required": ["scenario"],
        "properties": {
            "scenario": {"enum": sorted(SCENARIOS)},
            "seed": {"type": "integer", "minimum": 0},
            "params": {"type": "object"},
        },
        "allOf": branches,
    }
