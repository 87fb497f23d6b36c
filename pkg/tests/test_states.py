import cmath
import math

import numpy as np
import pytest

from cavityduo import (
    CatState,
    CoherentPair,
    DegenerateCat,
    LabCoefficients,
    LiouvillianSpec,
    ModelParams,
    WeakCouplingInvalid,
    aux_functions,
    build_cat,
    cat_components,
    cat_density_matrix,
    coherence_preservation_residual,
    coherent_overlap,
    constants,
    effective_detunings,
    evolve,
    evolve_coherent_pair,
    evolve_coherent_weak,
    linear_entropy,
    weak_coupling_rates,
)
from cavityduo.states import cat_mean_amplitudes


def _engine(params, coeffs):
    dets = effective_detunings(params, coeffs)
    return dets, constants(dets, coeffs)


# ---------------------------------------------------------------------------
# coherent overlap
# ---------------------------------------------------------------------------

def test_overlap_vacuum_and_normalization():
    w = 0.7 + 0.2j
    assert coherent_overlap(0.0, w) == pytest.approx(cmath.exp(-abs(w) ** 2 / 2))
    assert coherent_overlap(w, w) == pytest.approx(1.0)


def test_overlap_matches_fock_series():
    alpha, beta = 1.0 + 0.0j, 0.0 + 1.0j
    series = 0.0j
    term = 1.0 + 0.0j
    for n in range(0, 60):
        if n > 0:
            term *= np.conj(alpha) * beta / n
        series += term
    series *= math.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2)
    assert coherent_overlap(alpha, beta) == pytest.approx(series, abs=1e-15)


# ---------------------------------------------------------------------------
# exact coherent-pair evolution
# ---------------------------------------------------------------------------

def test_coherent_pair_identity_at_t0(weak_params, weak_coeffs):
    dets, pc = _engine(weak_params, weak_coeffs)
    init = CoherentPair(1.0, 0.5)
    aux = aux_functions(0.0, pc, dets, weak_coeffs)
    assert evolve_coherent_pair(init, 0.0, pc, aux) == init


def test_coherent_pair_decoupled_rates():
    params = ModelParams(1.0, 1.2, 0.0)
    coeffs = LabCoefficients(0.05, 0.0, 0.0, 0.3, 0, 0, 0, 0)
    dets, pc = _engine(params, coeffs)
    init = CoherentPair(0.8, -0.4j)
    t = 2.3
    out = evolve_coherent_pair(init, t, pc, aux_functions(t, pc, dets, coeffs))
    assert out.v_a == pytest.approx(init.v_a * cmath.exp(-(0.05 + 1j) * t), rel=1e-12)
    assert out.v_b == pytest.approx(init.v_b * cmath.exp(-(0.3 + 1.2j) * t), rel=1e-12)


def test_coherent_pair_matches_oracle(weak_params, weak_coeffs):
    # Brute-force check at one time; the full [0, 10] scan runs in acceptance.
    dets, pc = _engine(weak_params, weak_coeffs)
    init = CoherentPair(1.0, 0.5)
    t = 1.0
    spec = LiouvillianSpec(weak_params, weak_coeffs)
    from cavityduo import build_coherent

    res = evolve(build_coherent(init.v_a, init.v_b, 15, 15), spec, t, 1e-3, 1000)
    diag = res.samples[-1].diag
    out = evolve_coherent_pair(init, t, pc, aux_functions(t, pc, dets, weak_coeffs))
    assert abs(diag.mean_a - out.v_a) < 1e-6
    assert abs(diag.mean_b - out.v_b) < 1e-6
    assert diag.purity >= 1.0 - 1e-6  # coherent states stay coherent


# ---------------------------------------------------------------------------
# weak-coupling approximation
# ---------------------------------------------------------------------------

def test_weak_rates_trivial_and_sum_rule():
    assert weak_coupling_rates(0.01, 0.5, 0.0) == (0.01, 0.5)
    k_plus, k_minus = weak_coupling_rates(0.01, 0.5, 0.05)
    assert k_plus + k_minus == 0.01 + 0.5  # algebraic identity, exact


def test_weak_rates_values_and_exact_crosscheck(weak_params, weak_coeffs):
    k_aa, k_bb, g = 0.01, 0.5, 0.05
    dk = k_bb - k_aa
    k_plus, k_minus = weak_coupling_rates(k_aa, k_bb, g)
    assert k_plus == pytest.approx(0.0151020408163265, rel=1e-12)
    assert k_minus == pytest.approx(0.4948979591836735, rel=1e-12)
    # Exact-constants oracle: Re(R -/+ r) agrees to O(g^4 / dk^3).
    dets, pc = _engine(weak_params, weak_coeffs)
    budget = 2.0 * g**4 / dk**3
    assert abs(k_plus - (pc.R - pc.r).real) < budget
    assert abs(k_minus - (pc.R + pc.r).real) < budget


def test_weak_rates_invalid():
    with pytest.raises(WeakCouplingInvalid):
        weak_coupling_rates(0.5, 0.01, 0.01)
    with pytest.raises(WeakCouplingInvalid):
        weak_coupling_rates(0.01, 0.5, 0.3)


def test_weak_evolution_trivial_cases():
    init = CoherentPair(1.0, 0.5)
    assert evolve_coherent_weak(init, 0.0, 1.0, 0.01, 0.5, 0.05) == init
    out = evolve_coherent_weak(init, 2.0, 1.0, 0.01, 0.5, 0.0)
    assert out.v_a == pytest.approx(init.v_a * cmath.exp(-(0.01 + 1j) * 2.0), rel=1e-12)
    assert out.v_b == pytest.approx(init.v_b * cmath.exp(-(0.5 + 1j) * 2.0), rel=1e-12)


def test_weak_evolution_accuracy_vs_exact(weak_params, weak_coeffs):
    # Relative error bounded by C (g/dk)^2 with C = 10 over t in [0, 10/k_bb].
    dets, pc = _engine(weak_params, weak_coeffs)
    init = CoherentPair(1.0, 0.5)
    g, dk = weak_params.g, weak_coeffs.k_bb - weak_coeffs.k_aa
    budget = 10.0 * (g / dk) ** 2
    for t in np.linspace(0.0, 10.0 / weak_coeffs.k_bb, 41):
        exact = evolve_coherent_pair(
            init, t, pc, aux_functions(t, pc, dets, weak_coeffs)
        )
        approx = evolve_coherent_weak(
            init, t, weak_params.omega_a, weak_coeffs.k_aa, weak_coeffs.k_bb, g
        )
        scale = max(abs(exact.v_a), abs(exact.v_b))
        assert abs(approx.v_a - exact.v_a) <= budget * scale
        assert abs(approx.v_b - exact.v_b) <= budget * scale


# ---------------------------------------------------------------------------
# cat-state components, density matrix, entropy
# ---------------------------------------------------------------------------

def test_cat_state_rejects_zero_amplitude():
    with pytest.raises(DegenerateCat):
        CatState(w=0.0)


def test_cat_components_initial_and_decoupled(dfs_params, dfs_coeffs):
    dets, pc = _engine(dfs_params, dfs_coeffs)
    cat = CatState(w=1.0)
    comps0 = cat_components(cat, 0.0, pc, aux_functions(0.0, pc, dets, dfs_coeffs))
    assert (comps0.sigma_1, comps0.sigma_2) == (1.0, 1.0)
    assert (comps0.eps_1, comps0.eps_2) == (0.0, 0.0)
    params = ModelParams(1.0, 1.2, 0.0)
    coeffs = LabCoefficients(0.05, 0.0, 0.0, 0.3, 0, 0, 0, 0)
    dets2, pc2 = _engine(params, coeffs)
    comps = cat_components(cat, 3.0, pc2, aux_functions(3.0, pc2, dets2, coeffs))
    assert comps.eps_1 == 0.0
    assert comps.eps_2 == 0.0


def test_cat_components_dfs_antisymmetric_mode_constant(dfs_params, dfs_coeffs):
    # With all four rates equal the antisymmetric combination is undamped:
    # |sigma_i - eps_i| stays |w| for all t.
    dets, pc = _engine(dfs_params, dfs_coeffs)
    cat = CatState(w=1.0)
    for t in (0.5, 2.0, 10.0, 40.0):
        comps = cat_components(cat, t, pc, aux_functions(t, pc, dets, dfs_coeffs))
        assert abs(comps.sigma_1 - comps.eps_1) == pytest.approx(1.0, rel=1e-12)
        assert abs(comps.sigma_2 - comps.eps_2) == pytest.approx(1.0, rel=1e-12)


def test_cat_density_matrix_initial_state(weak_params, weak_coeffs):
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    comps = cat_components(cat, 0.0, pc, aux_functions(0.0, pc, dets, weak_coeffs))
    rho, renorm = cat_density_matrix(cat, comps, 15, 15)
    ref = build_cat(1.0, 0.0, 15, 15)
    assert renorm < 1e-10
    assert np.max(np.abs(rho.data - ref.data)) < 1e-12
    purity = float(np.einsum("ij,ji->", rho.data, rho.data).real)
    assert purity == pytest.approx(1.0, abs=1e-10)


def test_cat_density_matrix_matches_oracle(weak_params, weak_coeffs):
    t = 0.5
    spec = LiouvillianSpec(weak_params, weak_coeffs)
    res = evolve(build_cat(1.0, 0.0, 15, 15), spec, t, 1e-3, 500, keep_states=True)
    oracle = res.samples[-1].state.data
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    comps = cat_components(cat, t, pc, aux_functions(t, pc, dets, weak_coeffs))
    projected, renorm = cat_density_matrix(cat, comps, 15, 15)
    eigs = np.linalg.eigvalsh(projected.data - oracle)
    assert 0.5 * np.abs(eigs).sum() < 1e-5
    assert renorm < 1e-8


def test_linear_entropy_initial_and_vacuum_limits(weak_params, weak_coeffs):
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    comps0 = cat_components(cat, 0.0, pc, aux_functions(0.0, pc, dets, weak_coeffs))
    ent0 = linear_entropy(cat, comps0)
    assert ent0.x == math.exp(-1.0)
    assert ent0.y == pytest.approx(ent0.x, rel=1e-12)
    assert ent0.delta <= 1e-14
    # All amplitudes decayed (the slow rate is ~0.015, so go far out): the
    # state approaches the pure vacuum.
    late = cat_components(cat, 1500.0, pc, aux_functions(1500.0, pc, dets, weak_coeffs))
    ent = linear_entropy(cat, late)
    assert ent.y == pytest.approx(1.0, abs=1e-10)
    assert ent.delta <= 1e-10


def test_linear_entropy_dfs_zero_for_all_times(dfs_params, dfs_coeffs):
    dets, pc = _engine(dfs_params, dfs_coeffs)
    cat = CatState(w=1.0)
    for t in np.linspace(0.0, 50.0, 101):
        comps = cat_components(cat, t, pc, aux_functions(t, pc, dets, dfs_coeffs))
        assert linear_entropy(cat, comps).delta <= 1e-10
        assert coherence_preservation_residual(cat, comps) <= 1e-10


def test_entropy_positive_and_residual_consistent(weak_params, weak_coeffs):
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    for t in (0.5, 1.0, 3.0):
        comps = cat_components(cat, t, pc, aux_functions(t, pc, dets, weak_coeffs))
        ent = linear_entropy(cat, comps)
        resid = coherence_preservation_residual(cat, comps)
        assert ent.delta > 0.0
        assert resid > 0.0


def test_cat_mean_amplitudes_against_oracle(weak_params, weak_coeffs):
    t = 0.8
    spec = LiouvillianSpec(weak_params, weak_coeffs)
    res = evolve(build_cat(1.0, 0.0, 15, 15), spec, t, 1e-3, 800)
    diag = res.samples[-1].diag
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    comps = cat_components(cat, t, pc, aux_functions(t, pc, dets, weak_coeffs))
    mean_a, mean_b = cat_mean_amplitudes(cat, comps)
    assert abs(mean_a - diag.mean_a) < 1e-6
    assert abs(mean_b - diag.mean_b) < 1e-6


def test_entropy_matches_oracle_purity_deficit(weak_params, weak_coeffs):
    t = 1.0
    spec = LiouvillianSpec(weak_params, weak_coeffs)
    res = evolve(build_cat(1.0, 0.0, 15, 15), spec, t, 1e-3, 250)
    dets, pc = _engine(weak_params, weak_coeffs)
    cat = CatState(w=1.0)
    for sample in res.samples:
        comps = cat_components(
            cat, sample.t, pc, aux_functions(sample.t, pc, dets, weak_coeffs)
        )
        ent = linear_entropy(cat, comps)
        oracle_delta = sample.diag.trace.real - sample.diag.purity
        assert abs(ent.delta - oracle_delta) < 1e-5
