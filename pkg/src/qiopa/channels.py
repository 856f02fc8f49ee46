"""Cloning (k1) and anticloning (k2) channels: reduced states, fidelities, entropy."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from math import sqrt

import numpy as np

from .dynamics import AmplifierParams, PolarizationQubit
from .errors import EmptySectorError, InternalConsistencyError, InvalidArgumentsError
from .fock import (
    DensityMatrix,
    StateVector,
    number_expectation,
    partial_trace,
    rotate_polarization,
    von_neumann_entropy,
)

SECTOR = (2, 1)  # photons on k1, photons on k2 in a four-fold coincidence


@dataclass(frozen=True)
class FidelityReport:
    F: float | None
    F_star: float | None
    R: float | None
    R_star: float | None
    leakage: float
    sector_weight: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _accumulate(entries: dict, kets, block):
    for r, kr in enumerate(kets):
        for c, kc in enumerate(kets):
            if kr is None or kc is None or block[r][c] == 0:
                continue
            entries[(kr, kc)] = entries.get((kr, kc), 0) + block[r][c]


def _to_density(entries: dict, modes) -> DensityMatrix:
    basis = sorted({k for pair in entries for k in pair})
    index = {b: i for i, b in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for (kr, kc), value in entries.items():
        rho[index[kr], index[kc]] += value
    trace = float(np.trace(rho).real)
    return DensityMatrix(rho, tuple(basis), modes, max(0.0, 1.0 - trace))


def _valid(ket):
    return ket if min(ket) >= 0 else None


def rho1_series(qubit: PolarizationQubit, params: AmplifierParams, n_max: int = 6) -> DensityMatrix:
    """Cloning-channel state as a sum of 2x2 blocks, one per pair order n <= n_max.

    Block (n, i) lives on ``{|i, n-i+1>, |i+1, n-i>}`` of modes (1h, 1v).
    """
    a, b = qubit.alpha, qubit.beta
    C, G = params.C, params.gamma
    entries: dict = {}
    for n in range(n_max + 1):
        w = C**-6 * G ** (2 * n)
        for i in range(n + 1):
            root = sqrt((i + 1) * (n - i + 1))
            block = [
                [w * abs(b) ** 2 * (n - i + 1), w * np.conj(a) * b * root],
                [w * a * np.conj(b) * root, w * abs(a) ** 2 * (i + 1)],
            ]
            _accumulate(entries, [_valid((i, n - i + 1)), _valid((i + 1, n - i))], block)
    return _to_density(entries, ("1h", "1v"))


def rho2_series(qubit: PolarizationQubit, params: AmplifierParams, n_max: int = 6) -> DensityMatrix:
    """Anticloning-channel state; block (n, i), i = 0..n+1, on ``{|n-i, i>, |n-i+1, i-1>}`` of (2h, 2v).

    The intrinsic phase enters only through the off-diagonal factor epsilon.
    """
    a, b = qubit.alpha, qubit.beta
    C, G, eps = params.C, params.gamma, params.epsilon
    entries: dict = {}
    for n in range(n_max + 1):
        w = C**-6 * G ** (2 * n)
        for i in range(n + 2):
            root = sqrt((n - i + 1) * i)
            block = [
                [w * abs(b) ** 2 * (n - i + 1), w * np.conj(eps) * np.conj(a) * b * root],
                [w * eps * a * np.conj(b) * root, w * abs(a) ** 2 * i],
            ]
            _accumulate(entries, [_valid((n - i, i)), _valid((n - i + 1, i - 1))], block)
    return _to_density(entries, ("2h", "2v"))


def _in_sector(ket) -> bool:
    return (ket[0] + ket[1], ket[2] + ket[3]) == SECTOR


def _frame_populations(state: StateVector, qubit: PolarizationQubit) -> dict:
    """Photon-number populations with each spatial mode analyzed in the (qubit, antipode) basis."""
    aligned = rotate_polarization(state, qubit.frame().conj().T)
    return {k: abs(a) ** 2 for k, a in aligned.amplitudes.items()}


def postselected_report(state: StateVector, qubit: PolarizationQubit) -> FidelityReport:
    """Fidelities on the coincidence sector (2 photons on k1, 1 on k2).

    F and F* come from number-operator traces of the reduced states; R and R*
    are the population ratios read off in the qubit-aligned frame.
    """
    sector = state.select(_in_sector)
    weight = sector.norm2()
    if weight < 1e-14:
        raise EmptySectorError(f"coincidence sector weight {weight:.3e} is empty")
    sector = sector * (1 / sqrt(weight))
    rho1 = partial_trace(sector, "k1")
    rho2 = partial_trace(sector, "k2")
    n1 = number_expectation(rho1, "pi", qubit) + number_expectation(rho1, "perp", qubit)
    n2 = number_expectation(rho2, "pi", qubit) + number_expectation(rho2, "perp", qubit)
    F = number_expectation(rho1, "pi", qubit) / n1
    F_star = number_expectation(rho2, "perp", qubit) / n2

    pops = _frame_populations(sector, qubit)
    clone = sum(p for k, p in pops.items() if k[:2] == (2, 0))
    mixed = sum(p for k, p in pops.items() if k[:2] == (1, 1))
    flipped = sum(p for k, p in pops.items() if k[2:] == (0, 1))
    unflipped = sum(p for k, p in pops.items() if k[2:] == (1, 0))
    R = clone / mixed if mixed > 0 else float("inf")
    R_star = flipped / unflipped if unflipped > 0 else float("inf")
    return FidelityReport(F, F_star, R, R_star, state.leakage, weight)


def postselected_cloning_fidelity(state: StateVector, qubit: PolarizationQubit) -> FidelityReport:
    return postselected_report(state, qubit)


def postselected_unot_fidelity(state: StateVector, qubit: PolarizationQubit) -> FidelityReport:
    return postselected_report(state, qubit)


def unconditioned_fidelities(state: StateVector, qubit: PolarizationQubit) -> tuple:
    """Number-operator ratios on the full (not postselected) reduced states.

    This is a different quantity from the coincidence fidelities: at finite
    gain it mixes every pair order and includes the unamplified input photon.
    """
    rho1 = partial_trace(state, "k1")
    rho2 = partial_trace(state, "k2")
    n1 = number_expectation(rho1, "pi", qubit) + number_expectation(rho1, "perp", qubit)
    n2 = number_expectation(rho2, "pi", qubit) + number_expectation(rho2, "perp", qubit)
    F = number_expectation(rho1, "pi", qubit) / n1
    F_star = number_expectation(rho2, "perp", qubit) / n2 if n2 > 0 else None
    return F, F_star


def _check_ratio(R):
    if R < 0:
        raise InvalidArgumentsError(f"ratio must be >= 0, got {R}")
    return Fraction(R) if isinstance(R, (int, Fraction)) else R


def fidelity_from_ratio(R):
    """Cloning fidelity (2R + 1) / (2R + 2); exact for int or Fraction input."""
    R = _check_ratio(R)
    return (2 * R + 1) / (2 * R + 2)


def unot_from_ratio(R_star):
    """U-NOT fidelity R* / (R* + 1); exact for int or Fraction input."""
    R_star = _check_ratio(R_star)
    return R_star / (R_star + 1)


def optimal_cloning_fidelity(N: int, M: int) -> Fraction:
    if not (1 <= N <= M):
        raise InvalidArgumentsError(f"need 1 <= N <= M, got N={N}, M={M}")
    return Fraction(N * M + M + N, M * N + 2 * M)


def estimation_fidelity(N: int) -> Fraction:
    if N < 1:
        raise InvalidArgumentsError(f"need N >= 1, got {N}")
    return Fraction(N + 1, N + 2)


def entanglement_entropy(state: StateVector) -> float:
    """Entropy of entanglement between k1 and k2, in bits."""
    if state.leakage >= 1e-6:
        raise InvalidArgumentsError(f"state leakage {state.leakage:.2e} too large for a pure-state entropy")
    s1 = von_neumann_entropy(partial_trace(state, "k1"))
    s2 = von_neumann_entropy(partial_trace(state, "k2"))
    if abs(s1 - s2) >= 1e-9:
        raise InternalConsistencyError(f"S(rho1) = {s1!r} but S(rho2) = {s2!r}")
    return s1
