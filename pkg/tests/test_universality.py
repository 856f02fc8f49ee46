from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_qubits
from qiopa.dynamics import PRESETS, AmplifierParams, PolarizationQubit, coherent_gain, evolve_qubit
from qiopa.errors import InvalidArgumentsError, ResourceLimitError
from qiopa.fock import rotate_polarization
from qiopa.universality import (
    Su2Element,
    bloch_fidelity_scan,
    degenerate_universality_scan,
    fidelity_spread,
    haar_qubits,
    hamiltonian_invariance_residual,
    hamiltonian_matrix,
    relative_difference,
    rotate_qubit,
    stimulated_signal,
    truncation_stable,
)

HADAMARD_LIKE = Su2Element(1 / sqrt(2), 1 / sqrt(2))

unit_floats = st.floats(-1, 1)


@st.composite
def su2_elements(draw):
    x = np.array([draw(unit_floats) for _ in range(4)])
    if np.linalg.norm(x) < 1e-3:
        x = np.array([1.0, 0, 0, 0])
    x /= np.linalg.norm(x)
    return Su2Element(complex(x[0], x[1]), complex(x[2], x[3]))


def test_matrix_is_special_unitary(rng):
    for _ in range(10):
        m = Su2Element.random(rng).matrix
        assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-14)
        assert np.linalg.det(m) == pytest.approx(1)


def test_invalid_element():
    with pytest.raises(InvalidArgumentsError):
        Su2Element(1, 1)


def test_rotate_qubit_examples():
    q = rotate_qubit(PRESETS["H"], Su2Element.identity())
    assert q == PRESETS["H"]
    out = rotate_qubit(PRESETS["H"], HADAMARD_LIKE)
    assert out.alpha == pytest.approx(1 / sqrt(2)) and out.beta == pytest.approx(-1 / sqrt(2))


@settings(max_examples=50)
@given(su2_elements())
def test_rotate_then_inverse(r):
    q = PolarizationQubit.normalized(0.3 - 0.2j, 0.9j)
    back = rotate_qubit(rotate_qubit(q, r), r.inverse())
    assert abs(back.alpha - q.alpha) < 1e-14 and abs(back.beta - q.beta) < 1e-14
    assert abs(abs(rotate_qubit(q, r).alpha) ** 2 + abs(rotate_qubit(q, r).beta) ** 2 - 1) < 1e-14


def test_haar_qubits_prefix_and_determinism():
    a = haar_qubits(5, seed=3)
    assert a[:3] == [PRESETS["H"], PRESETS["D"], PRESETS["L"]]
    assert len(a) == 8
    assert a == haar_qubits(5, seed=3)
    assert a != haar_qubits(5, seed=4)


def test_haar_qubits_cover_sphere():
    z = np.array([abs(q.alpha) ** 2 - abs(q.beta) ** 2 for q in haar_qubits(4000, seed=1)[3:]])
    # uniform on the sphere means the z component is uniform on [-1, 1]
    assert abs(z.mean()) < 0.05 and z.var() == pytest.approx(1 / 3, abs=0.03)


# -- Hamiltonian --------------------------------------------------------------


def test_hamiltonian_is_hermitian():
    h = hamiltonian_matrix(0.7, 4)
    assert np.allclose(h, h.conj().T)


def test_identity_rotation_residual_zero():
    for phi in (0.0, 0.3, pi / 2):
        assert hamiltonian_invariance_residual(Su2Element.identity(), phi, 4) == 0


def test_invariance_at_zero_phase(rng):
    for _ in range(5):
        assert hamiltonian_invariance_residual(Su2Element.random(rng), 0.0, 5) < 1e-10


def test_invariance_breaks_at_quarter_turn():
    assert hamiltonian_invariance_residual(HADAMARD_LIKE, pi / 2, 5, relative=True) > 0.1
    assert truncation_stable(HADAMARD_LIKE, pi / 2, 6)


def test_residual_resource_guard():
    with pytest.raises(ResourceLimitError):
        hamiltonian_invariance_residual(HADAMARD_LIKE, 0.0, 40)


def test_covariance_of_evolution(rng):
    p = AmplifierParams(0.2)
    for q in random_qubits(3, seed=5):
        r = Su2Element.random(rng)
        rotated = evolve_qubit(rotate_qubit(q, r), p, 9)
        undone = rotate_polarization(rotated, r.matrix.conj().T)
        plain = evolve_qubit(q, p, 9)
        kets = set(undone.kets()) | set(plain.kets())
        assert max(abs(undone[k] - plain[k]) for k in kets) < 1e-10


def test_covariance_fails_off_zero_phase(rng):
    p = AmplifierParams(0.2, pi / 2)
    q = PRESETS["H"]
    r = HADAMARD_LIKE
    undone = rotate_polarization(evolve_qubit(rotate_qubit(q, r), p, 5), r.matrix.conj().T)
    plain = evolve_qubit(q, p, 5)
    kets = set(undone.kets()) | set(plain.kets())
    assert max(abs(undone[k] - plain[k]) for k in kets) > 1e-2


# -- scans --------------------------------------------------------------------


def test_bloch_scan_constant_at_zero_phase():
    rows = bloch_fidelity_scan(AmplifierParams(0.11), samples=20, seed=11)
    assert len(rows) == 23
    assert fidelity_spread(rows) < 1e-10
    assert rows[0].F == pytest.approx(5 / 6, abs=1e-12)
    assert all(r.F_star == pytest.approx(2 / 3, abs=1e-12) for r in rows)


def test_bloch_scan_reference_qubits_identical():
    rows = bloch_fidelity_scan(AmplifierParams(0.11), samples=0, seed=0)
    assert [r.qubit for r in rows] == [PRESETS["H"], PRESETS["D"], PRESETS["L"]]
    assert fidelity_spread(rows) < 1e-10


def test_bloch_scan_zero_gain_marks_empty():
    rows = bloch_fidelity_scan(AmplifierParams(0.0), samples=2, seed=0)
    assert all(r.empty and r.F is None and r.F_star is None for r in rows)


def test_bloch_scan_user_qubits():
    qs = random_qubits(4, seed=1)
    rows = bloch_fidelity_scan(AmplifierParams(0.11), qubits=qs)
    assert [r.qubit for r in rows] == qs


def test_degenerate_scan_examples():
    p = AmplifierParams(0.11)
    h, v, d = (stimulated_signal(PRESETS[n], p) for n in "HVD")
    assert h == pytest.approx(v, rel=1e-12)
    assert relative_difference(h, d) > 0.05
    assert all(w == 0 for _, w in degenerate_universality_scan(AmplifierParams(0.0), samples=2, seed=0))


def test_degenerate_scan_varies_over_sphere():
    weights = [w for _, w in degenerate_universality_scan(AmplifierParams(0.11), samples=10, seed=2)]
    assert max(weights) - min(weights) > 0.05 * max(weights)


@settings(max_examples=50)
@given(su2_elements(), st.floats(0, 4), st.floats(0, 2 * pi), st.floats(0, 1.5))
def test_coherent_injection_universality(r, amp, phase, g):
    seed = np.array([amp * np.exp(1j * phase), 0.3 * amp])
    rotated = r.matrix @ seed
    p = AmplifierParams(g)
    a = coherent_gain(*seed, p)
    b = coherent_gain(*rotated, p)
    assert a[2] + a[3] == pytest.approx(b[2] + b[3], abs=1e-12 * max(1, a[2] + a[3]))
