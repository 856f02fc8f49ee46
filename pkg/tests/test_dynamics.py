from fractions import Fraction
from math import comb, cosh, sinh, sqrt, tanh

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_qubits
from qiopa.dynamics import (
    DEGENERATE_MODES,
    PRESETS,
    AmplifierParams,
    PolarizationQubit,
    bogoliubov_coefficients,
    clone_weights,
    coherent_gain,
    degenerate_evolve,
    evolution_oracle,
    evolve_qubit,
    first_order_output,
    heisenberg_matrices,
    macrostates,
    nm_clone_state,
    spdc_output,
)
from qiopa.errors import InvalidArgumentsError, ResourceLimitError, UnsupportedConfigurationError
from qiopa.fock import StateVector, fock_basis, inner, lowering_matrix, rotate_polarization


def max_diff(a: StateVector, b: StateVector) -> float:
    kets = set(a.kets()) | set(b.kets())
    return max((abs(a[k] - b[k]) for k in kets), default=0.0)


# -- parameters and qubits ----------------------------------------------------


@settings(max_examples=50)
@given(st.floats(0, 3), st.floats(-7, 7))
def test_params_invariants(g, phi):
    p = AmplifierParams(g, phi)
    assert p.C**2 - p.S**2 == pytest.approx(1, abs=1e-12 * p.C**2)
    assert abs(p.epsilon) == pytest.approx(1)
    assert 0 <= p.gamma < 1


def test_negative_gain_rejected():
    with pytest.raises(ValueError):
        AmplifierParams(-0.1)


def test_unnormalized_qubit_rejected():
    with pytest.raises(InvalidArgumentsError):
        PolarizationQubit(1, 1)


# -- macrostates --------------------------------------------------------------


def test_macrostates_at_zero_gain():
    a, b = macrostates(AmplifierParams(0.0), cutoff=6)
    assert a.amplitudes == {(1, 0, 0, 0): 1}
    assert b.amplitudes == {(0, 1, 0, 0): 1}


def test_first_pair_coefficient():
    g = 0.11
    a, _ = macrostates(AmplifierParams(g), cutoff=6)
    assert a[(2, 0, 0, 1)] == pytest.approx(-(cosh(g) ** -3) * tanh(g) * sqrt(2), abs=1e-15)


@pytest.mark.parametrize("g", [0.0, 0.11, 0.3, 0.5])
def test_macrostates_orthogonal(g):
    a, b = macrostates(AmplifierParams(g, 0.4), cutoff=12)
    assert abs(inner(a, b)) < 1e-12


@pytest.mark.parametrize("g", [0.05, 0.11])
def test_macrostate_norms(g):
    for s in macrostates(AmplifierParams(g), cutoff=12):
        assert s.leakage < 1e-10
        assert s.norm2() + s.leakage == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("g", [0.2, 0.4])
def test_macrostate_leakage_is_the_series_tail(g):
    # pair orders n >= 6 fall outside cutoff 12; their weight is C^-6 G^2n (n+1)(n+2)/2
    p = AmplifierParams(g)
    tail = sum(p.C**-6 * p.gamma ** (2 * n) * (n + 1) * (n + 2) / 2 for n in range(6, 400))
    for s in macrostates(p, cutoff=12):
        assert s.leakage == pytest.approx(tail, rel=1e-6)


def test_macrostates_need_two_photons():
    with pytest.raises(InvalidArgumentsError):
        macrostates(AmplifierParams(0.1), cutoff=1)


def test_series_order_is_ascending_pair_order():
    a, _ = macrostates(AmplifierParams(0.2, 0.3), cutoff=9)
    orders = [sum(k) for k in a.amplitudes]
    assert orders == sorted(orders)


# -- evolution -----------------------------------------------------------------


def test_evolve_identity_at_zero_gain():
    assert evolve_qubit(PRESETS["H"], AmplifierParams(0.0)).amplitudes == {(1, 0, 0, 0): 1}


def test_evolve_first_order_content():
    p = AmplifierParams(0.11)
    exact = evolve_qubit(PRESETS["H"], p, cutoff=3)
    approx = first_order_output(PRESETS["H"], p)
    # the gap is dominated by the normalization C^-3 ~ 1 - 3g^2/2
    assert max_diff(exact, approx) < 2 * tanh(0.11) ** 2


@pytest.mark.parametrize("g", [0.05, 0.11, 0.3])
@pytest.mark.parametrize("phi", [0.0, 0.7])
def test_evolve_matches_oracle(g, phi):
    p = AmplifierParams(g, phi)
    for q in random_qubits(2, seed=int(100 * g)) + [PRESETS["H"]]:
        series = evolve_qubit(q, p, cutoff=8)
        oracle = evolution_oracle(StateVector({(1, 0, 0, 0): q.alpha, (0, 1, 0, 0): q.beta}, cutoff=8), p)
        assert max_diff(series, oracle) < 1e-8
        assert series.leakage == pytest.approx(oracle.leakage, abs=1e-8)


@pytest.mark.parametrize("g", [0.05, 0.3])
@pytest.mark.parametrize("phi", [0.0, 1.9])
def test_spdc_matches_oracle(g, phi):
    p = AmplifierParams(g, phi)
    assert max_diff(spdc_output(p, 8), evolution_oracle(StateVector.vacuum(8), p)) < 1e-8


def test_spdc_first_order_signs():
    p = AmplifierParams(0.11)
    s = spdc_output(p, 6)
    vac = s[(0, 0, 0, 0)]
    assert s[(1, 0, 0, 1)] / vac == pytest.approx(-p.gamma)
    assert s[(0, 1, 1, 0)] / vac == pytest.approx(p.gamma)


def test_spdc_emits_in_pairs():
    s = spdc_output(AmplifierParams(0.3, 0.5), 12)
    assert all(k[0] == k[3] and k[1] == k[2] for k in s.kets())


def test_spdc_vacuum_at_zero_gain():
    assert spdc_output(AmplifierParams(0.0)).amplitudes == {(0, 0, 0, 0): 1}


def test_first_order_output_qubit_h():
    p = AmplifierParams(0.11)
    s = first_order_output(PRESETS["H"], p)
    assert abs(s[(2, 0, 0, 1)]) ** 2 / abs(s[(1, 1, 1, 0)]) ** 2 == pytest.approx(2)
    assert first_order_output(PRESETS["H"], AmplifierParams(0.0)).amplitudes == {(1, 0, 0, 0): 1}


def test_first_order_output_is_rotated_image():
    p = AmplifierParams(0.11)
    d = PRESETS["D"]
    rotated = rotate_polarization(first_order_output(PRESETS["H"], p), d.frame())
    assert max_diff(first_order_output(d, p), rotated) < 1e-12


def test_first_order_output_needs_zero_phase():
    with pytest.raises(UnsupportedConfigurationError):
        first_order_output(PRESETS["H"], AmplifierParams(0.11, 0.2))


def test_oracle_identity_at_zero_gain():
    state = StateVector({(1, 0, 0, 0): 0.6, (0, 1, 1, 0): 0.8})
    assert max_diff(evolution_oracle(state, AmplifierParams(0.0)), state) < 1e-14


def test_oracle_conserves_pair_differences():
    out = evolution_oracle(StateVector.basis((2, 1, 0, 0), 10), AmplifierParams(0.3, 0.2))
    assert {(k[0] - k[3], k[1] - k[2]) for k in out.kets()} == {(2, 1)}
    assert out.norm2() + out.leakage == pytest.approx(1, abs=1e-9)


def test_oracle_resource_limit():
    with pytest.raises(ResourceLimitError):
        evolution_oracle(StateVector.basis((0, 0, 0, 0), 200), AmplifierParams(0.5), pad_pairs=40)


# -- pair-operator algebra ----------------------------------------------------


def test_pair_operators_close_su11():
    # K- = a b, K+ = a† b†, K0 = (n_a + n_b + 1)/2 on kets well below the cutoff
    basis = fock_basis(4, 8)
    lower = [lowering_matrix(basis, m).toarray() for m in range(4)]
    inside = [i for i, k in enumerate(basis) if sum(k) <= 4]
    for a, b in ((0, 3), (1, 2)):
        k_minus = lower[a] @ lower[b]
        k_plus = k_minus.conj().T
        k0 = (lower[a].conj().T @ lower[a] + lower[b].conj().T @ lower[b] + np.eye(len(basis))) / 2
        for lhs, rhs in (
            (k_minus @ k_plus - k_plus @ k_minus, 2 * k0),
            (k0 @ k_plus - k_plus @ k0, k_plus),
            (k0 @ k_minus - k_minus @ k0, -k_minus),
        ):
            assert np.allclose(lhs[np.ix_(inside, inside)], rhs[np.ix_(inside, inside)], atol=1e-12)


# -- Bogoliubov picture -------------------------------------------------------


def test_bogoliubov_examples():
    ma, map_ = bogoliubov_coefficients(AmplifierParams(0.0))
    assert np.allclose(ma, np.eye(2)) and np.allclose(map_, np.eye(2))
    _, map_ = bogoliubov_coefficients(AmplifierParams(0.11))
    assert map_[0, 1] == pytest.approx(-sinh(0.11))


@settings(max_examples=30)
@given(st.floats(0, 2), st.floats(-4, 4))
def test_bogoliubov_preserves_commutators(g, phi):
    metric = np.diag([1, -1])
    for m in (*bogoliubov_coefficients(AmplifierParams(g, phi)), *heisenberg_matrices(AmplifierParams(g, phi))):
        assert m[0, 0] * m[1, 1] - abs(m[0, 1]) ** 2 == pytest.approx(1, rel=1e-9)
        assert np.allclose(m @ metric @ m.conj().T, metric, atol=1e-9 * abs(m[0, 0]) ** 2)


def test_heisenberg_map_matches_oracle():
    # <psi(t)| a1h |psi(t)> for a superposition of vacuum and one pair tracks C a1h - S a2v†
    p = AmplifierParams(0.2)
    psi = StateVector({(0, 0, 0, 0): 0.6, (1, 0, 0, 0): 0.8}, cutoff=24)
    out = evolution_oracle(psi, p)
    lowered = {}
    for k, a in out.amplitudes.items():
        if k[0]:
            t = (k[0] - 1, *k[1:])
            lowered[t] = lowered.get(t, 0) + sqrt(k[0]) * a
    moment = sum(np.conj(out[k]) * v for k, v in lowered.items())
    m_a, _ = heisenberg_matrices(p)
    assert moment == pytest.approx(m_a[0, 0] * 0.6 * 0.8, abs=1e-9)


def test_coherent_gain_examples():
    p0 = AmplifierParams(0.0)
    assert np.allclose(coherent_gain(1 + 1j, 0.5, p0), [2, 0.25, 0, 0])
    p = AmplifierParams(0.4)
    assert np.allclose(coherent_gain(0, 0, p), [sinh(0.4) ** 2] * 4)
    out = coherent_gain(0.3, 0.2j, p)
    assert out[2] + out[3] == pytest.approx(sinh(0.4) ** 2 * (0.09 + 0.04 + 2))


def test_coherent_gain_moments_match_oracle():
    # phase-insensitive moments: a Fock input with n photons gives C^2 n + S^2 and S^2 (n + 1)
    p = AmplifierParams(0.25, 0.3)
    out = evolution_oracle(StateVector.basis((2, 0, 0, 0), 30), p)
    n1h = sum(abs(a) ** 2 * k[0] for k, a in out.amplitudes.items())
    n2v = sum(abs(a) ** 2 * k[3] for k, a in out.amplitudes.items())
    expected = coherent_gain(sqrt(2), 0, p)
    assert n1h == pytest.approx(expected[0], abs=1e-8)
    assert n2v == pytest.approx(expected[3], abs=1e-8)


# -- cloning structure ---------------------------------------------------------


def test_clone_weights_normalized_exactly():
    for M in range(1, 11):
        for N in range(1, M + 1):
            assert sum(clone_weights(N, M)) == 1


def test_nm_clone_state_examples():
    assert nm_clone_state(1, 1).amplitudes == {(1, 0, 0, 0): 1}
    s = nm_clone_state(1, 2)
    assert s[(2, 0, 0, 1)] == pytest.approx(sqrt(2 / 3))
    assert s[(1, 1, 1, 0)] == pytest.approx(-sqrt(1 / 3))
    assert clone_weights(2, 3) == [Fraction(3, 4), Fraction(1, 4)]
    with pytest.raises(InvalidArgumentsError):
        nm_clone_state(3, 2)


@pytest.mark.parametrize("M", [1, 2, 3, 4, 5])
def test_evolved_sector_is_optimal_clone(M):
    cutoff = max(2, 2 * M - 1)
    state = evolve_qubit(PRESETS["H"], AmplifierParams(0.11), cutoff=cutoff)
    sector = state.select(lambda k: k[0] + k[1] == M and k[2] + k[3] == M - 1)
    target = nm_clone_state(1, M, cutoff=cutoff)
    assert abs(inner(target, sector)) / sqrt(sector.norm2()) == pytest.approx(1, abs=1e-10)


# -- degenerate amplifier ------------------------------------------------------


def test_degenerate_identity_at_zero_gain():
    s = degenerate_evolve(PRESETS["D"], AmplifierParams(0.0), cutoff=5)
    assert s[(1, 0)] == pytest.approx(1 / sqrt(2)) and s[(0, 1)] == pytest.approx(1 / sqrt(2))


def test_degenerate_first_order():
    p = AmplifierParams(0.11)
    s = degenerate_evolve(PRESETS["H"], p, cutoff=7)
    assert s[(2, 1)] / s[(1, 0)] == pytest.approx(-sqrt(2) * p.gamma)


def test_degenerate_vacuum_input():
    p = AmplifierParams(0.11)
    out = evolution_oracle(StateVector.vacuum(8, modes=DEGENERATE_MODES), p)
    assert out[(1, 1)] / out[(0, 0)] == pytest.approx(-p.gamma)


@pytest.mark.parametrize("g", [0.11, 0.3])
def test_degenerate_matches_oracle(g):
    p = AmplifierParams(g)
    q = random_qubits(1, seed=3)[0]
    series = degenerate_evolve(q, p, cutoff=9)
    seed = StateVector({(1, 0): q.alpha, (0, 1): q.beta}, cutoff=9, modes=DEGENERATE_MODES)
    assert max_diff(series, evolution_oracle(seed, p)) < 1e-8
