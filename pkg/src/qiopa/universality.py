"""SU(2) polarization rotations and the (non-)universality of the amplifiers."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .channels import postselected_report
from .dynamics import PRESETS, AmplifierParams, PolarizationQubit, degenerate_evolve, evolve_qubit
from .errors import EmptySectorError, InvalidArgumentsError, ResourceLimitError
from .fock import fock_basis, lowering_matrix, number_operator

MAX_DENSE_DIM = 3000
REFERENCE_QUBITS = ("H", "D", "L")


@dataclass(frozen=True)
class Su2Element:
    theta: complex
    zeta: complex

    def __post_init__(self):
        if abs(abs(self.theta) ** 2 + abs(self.zeta) ** 2 - 1) > 1e-12:
            raise InvalidArgumentsError("SU(2) element needs |theta|^2 + |zeta|^2 = 1")

    @property
    def matrix(self) -> np.ndarray:
        t, z = complex(self.theta), complex(self.zeta)
        return np.array([[t, z], [-z.conjugate(), t.conjugate()]])

    def inverse(self) -> "Su2Element":
        return Su2Element(complex(self.theta).conjugate(), -complex(self.zeta))

    @classmethod
    def identity(cls) -> "Su2Element":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Su2Element":
        """Haar-random element: a uniform point on the 3-sphere."""
        x = rng.normal(size=4)
        x /= np.linalg.norm(x)
        return cls(complex(x[0], x[1]), complex(x[2], x[3]))


def rotate_qubit(qubit: PolarizationQubit, r: Su2Element) -> PolarizationQubit:
    alpha, beta = r.matrix @ qubit.vector
    return PolarizationQubit.normalized(alpha, beta)


def haar_qubits(count: int, seed: int) -> list:
    """The three reference qubits followed by ``count`` Haar-random ones."""
    if count < 0:
        raise InvalidArgumentsError(f"sample count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    qubits = [PRESETS[name] for name in REFERENCE_QUBITS]
    for _ in range(count):
        u, v = rng.random(2)
        qubits.append(PolarizationQubit.bloch(np.arccos(1 - 2 * u), 2 * np.pi * v))
    return qubits


# ----------------------------------------------------------------------------
# Hamiltonian invariance


def _dense_ladders(cutoff: int):
    basis = fock_basis(4, cutoff)
    if len(basis) > MAX_DENSE_DIM:
        raise ResourceLimitError(f"truncated basis has {len(basis)} states; limit is {MAX_DENSE_DIM}")
    return [lowering_matrix(basis, m).toarray() for m in range(4)]


def hamiltonian_matrix(phi: float, cutoff: int, r: Su2Element | None = None, ladders=None) -> np.ndarray:
    """Interaction Hamiltonian on all kets with at most ``cutoff`` photons.

    With ``r`` given, every mode operator is first replaced by its rotated
    counterpart, the same rotation acting on both spatial modes.  The
    truncated basis is closed under lowering, so pair products are exact.
    """
    lower = ladders if ladders is not None else _dense_ladders(cutoff)
    h1, v1, h2, v2 = lower
    if r is not None:
        m = r.matrix
        h1, v1 = m[0, 0] * h1 + m[0, 1] * v1, m[1, 0] * h1 + m[1, 1] * v1
        h2, v2 = m[0, 0] * h2 + m[0, 1] * v2, m[1, 0] * h2 + m[1, 1] * v2
    pairs = h1 @ v2 - np.exp(1j * phi) * (v1 @ h2)
    term = 1j * pairs
    return term + term.conj().T


def _spectral_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


def hamiltonian_invariance_residual(r: Su2Element, phi: float, cutoff: int = 6, relative: bool = False) -> float:
    """Largest singular value of H_rotated - H (optionally divided by that of H)."""
    ladders = _dense_ladders(cutoff)
    bare = hamiltonian_matrix(phi, cutoff, ladders=ladders)
    residual = _spectral_norm(hamiltonian_matrix(phi, cutoff, r, ladders=ladders) - bare)
    return residual / _spectral_norm(bare) if relative else residual


def truncation_stable(r: Su2Element, phi: float, cutoff: int = 6, tol: float = 0.1) -> bool:
    """True when the relative residual at ``cutoff`` and ``cutoff - 2`` agree within ``tol``."""
    hi = hamiltonian_invariance_residual(r, phi, cutoff, relative=True)
    lo = hamiltonian_invariance_residual(r, phi, cutoff - 2, relative=True)
    if max(hi, lo) < 1e-10:
        return True
    return abs(hi - lo) <= tol * max(hi, lo)


# ----------------------------------------------------------------------------
# Scans


@dataclass(frozen=True)
class ScanRow:
    qubit: PolarizationQubit
    F: float | None
    F_star: float | None

    @property
    def empty(self) -> bool:
        return self.F is None


def bloch_fidelity_scan(params: AmplifierParams, samples: int = 20, seed: int = 0, qubits=None) -> list:
    """Postselected fidelities for the reference qubits plus ``samples`` Haar qubits (or ``qubits``).

    The coincidence sector holds three photons, so a three-photon cutoff keeps
    it whole.  Empty sectors (zero gain) give rows with ``None`` fidelities.
    """
    qubits = list(qubits) if qubits is not None else haar_qubits(samples, seed)
    rows = []
    for q in qubits:
        try:
            report = postselected_report(evolve_qubit(q, params, cutoff=3), q)
        except EmptySectorError:
            rows.append(ScanRow(q, None, None))
            continue
        rows.append(ScanRow(q, report.F, report.F_star))
    return rows


def fidelity_spread(rows) -> float:
    values = [row.F for row in rows if not row.empty]
    return max(values) - min(values) if values else float("nan")


def stimulated_signal(qubit: PolarizationQubit, params: AmplifierParams) -> float:
    """Photons in the injected polarization carried by the one-pair (stimulated) term.

    The norm of that term alone is the same for every qubit, so the proxy
    weights it by the mean photon number along the injected polarization.
    """
    state = degenerate_evolve(qubit, params, cutoff=3)
    sector = state.select(lambda ket: sum(ket) == 3)
    if sector.norm2() == 0:
        return 0.0
    basis = sector.kets()
    vec = sector.dense(basis)
    n_op = number_operator(basis, qubit.vector)
    return float(np.real(np.vdot(vec, n_op @ vec)))


def degenerate_universality_scan(params: AmplifierParams, samples: int = 20, seed: int = 0, qubits=None) -> list:
    qubits = list(qubits) if qubits is not None else haar_qubits(samples, seed)
    return [(q, stimulated_signal(q, params)) for q in qubits]


def truncated_dimension(cutoff: int) -> int:
    return comb(cutoff + 4, 4)


def relative_difference(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b)) if max(abs(a), abs(b)) > 0 else 0.0

