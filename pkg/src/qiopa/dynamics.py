"""Output states of the quantum-injected parametric amplifier.

Two independent OPAs act on the four field modes: A on ``(1h, 2v)`` with
pair operator ``a_1h a_2v`` and A' on ``(1v, 2h)`` with pair operator
``a_1v a_2h``. With the interaction ``i chi [A - e^{i phi} A'] + h.c.`` the
evolution over gain ``g = chi t`` is

    U = exp(g (A - e^{i phi} A') - g (A† - e^{-i phi} A'†)).

The series constructors below and ``evolution_oracle`` (a dense matrix
exponential of that generator) are deliberately independent so that one can
check the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, log, sqrt

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgumentsError, ResourceLimitError, UnsupportedConfigurationError
from .fock import (
    DEFAULT_CUTOFF,
    MODES,
    StateVector,
    pair_lowering_matrix,
    rotate_polarization,
)

DEGENERATE_MODES = ("par", "perp")
ORACLE_MAX_BASIS = 4000


@dataclass(frozen=True)
class AmplifierParams:
    g: float
    phi: float = 0.0

    def __post_init__(self):
        if self.g < 0:
            raise InvalidArgumentsError(f"gain must be >= 0, got {self.g}")

    @property
    def C(self) -> float:
        return float(np.cosh(self.g))

    @property
    def S(self) -> float:
        return float(np.sinh(self.g))

    @property
    def gamma(self) -> float:
        return float(np.tanh(self.g))

    @property
    def epsilon(self) -> complex:
        return -np.exp(-1j * self.phi)

    @property
    def s_tilde(self) -> complex:
        return self.epsilon * self.S


@dataclass(frozen=True)
class PolarizationQubit:
    """Single-photon polarization ``alpha |H> + beta |V>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise InvalidArgumentsError(f"qubit is not normalized (|a|^2+|b|^2 = {norm!r})")

    @classmethod
    def normalized(cls, alpha, beta) -> "PolarizationQubit":
        norm = sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise InvalidArgumentsError("zero qubit vector")
        return cls(alpha / norm, beta / norm)

    @classmethod
    def bloch(cls, theta: float, varphi: float) -> "PolarizationQubit":
        return cls(np.cos(theta / 2), np.exp(1j * varphi) * np.sin(theta / 2))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])

    def perp(self) -> "PolarizationQubit":
        return PolarizationQubit(-self.beta.conjugate(), self.alpha.conjugate())

    def frame(self) -> np.ndarray:
        """SU(2) matrix whose first column is this qubit (H -> qubit, V -> its antipode)."""
        a, b = self.alpha, self.beta
        return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


PRESETS = {
    "H": PolarizationQubit(1, 0),
    "V": PolarizationQubit(0, 1),
    "D": PolarizationQubit.normalized(1, 1),
    "L": PolarizationQubit.normalized(1, 1j),
}


def _pairs_within(cutoff: int, photons_per_pair: int, offset: int):
    # ascending pair order n = i + j, then ascending j
    n = 0
    while offset + photons_per_pair * n <= cutoff:
        for j in range(n + 1):
            yield n - j, j
        n += 1


def macrostates(params: AmplifierParams, cutoff: int = DEFAULT_CUTOFF):
    """The two amplified macrostates grown from ``|1,0,0,0>`` and ``|0,1,0,0>``."""
    if cutoff < 2:
        raise InvalidArgumentsError("cutoff must be >= 2")
    C, G, eps = params.C, params.gamma, params.epsilon
    pref = C**-3
    amp_a, amp_b = {}, {}
    for i, j in _pairs_within(cutoff, 2, 1):
        common = pref * (-G) ** (i + j) * eps**j
        amp_a[(i + 1, j, j, i)] = common * sqrt(i + 1)
        amp_b[(i, j + 1, j, i)] = common * sqrt(j + 1)
    out = []
    for amps in (amp_a, amp_b):
        stored = sum(abs(a) ** 2 for a in amps.values())
        out.append(StateVector(amps, cutoff=cutoff, leakage=max(0.0, 1.0 - stored)))
    return tuple(out)


def evolve_qubit(qubit: PolarizationQubit, params: AmplifierParams, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    psi_a, psi_b = macrostates(params, cutoff)
    return qubit.alpha * psi_a + qubit.beta * psi_b


def spdc_output(params: AmplifierParams, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    """Amplifier output for vacuum on all four input modes."""
    C, G, eps = params.C, params.gamma, params.epsilon
    amps = {}
    for i, j in _pairs_within(cutoff, 2, 0):
        amps[(i, j, j, i)] = C**-2 * (-G) ** (i + j) * eps**j
    stored = sum(abs(a) ** 2 for a in amps.values())
    return StateVector(amps, cutoff=cutoff, leakage=max(0.0, 1.0 - stored))


def first_order_output(qubit: PolarizationQubit, params: AmplifierParams, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    """Output to first order in tanh(g), unnormalized.

    Only defined for phi = 0, where the dynamics is polarization invariant and
    the result for an arbitrary qubit is the SU(2) image of the H result.
    """
    if params.phi != 0:
        raise UnsupportedConfigurationError("first-order form requires phi = 0")
    G = params.gamma
    h_state = StateVector(
        {(1, 0, 0, 0): 1.0, (2, 0, 0, 1): -G * sqrt(2), (1, 1, 1, 0): G},
        cutoff=max(cutoff, 3),
    )
    return rotate_polarization(h_state, qubit.frame())


def clone_weights(N: int, M: int) -> list:
    """Exact squared coefficients C(M-m, N) / C(M+1, N+1) for m = 0..M-N."""
    if not (1 <= N <= M):
        raise InvalidArgumentsError(f"need 1 <= N <= M, got N={N}, M={M}")
    return [Fraction(comb(M - m, N), comb(M + 1, N + 1)) for m in range(M - N + 1)]


def nm_clone_state(N: int, M: int, cutoff: int | None = None) -> StateVector:
    """Optimal N -> M cloner output: M photons on k1, M - N on k2."""
    weights = clone_weights(N, M)
    total = 2 * M - N
    if cutoff is None:
        cutoff = total
    elif total > cutoff:
        raise InvalidArgumentsError(f"state needs {total} photons, cutoff is {cutoff}")
    amps = {(M - m, m, m, M - N - m): (-1) ** m * sqrt(w) for m, w in enumerate(weights)}
    return StateVector(amps, cutoff=cutoff)


def bogoliubov_coefficients(params: AmplifierParams):
    """Mode-mixing matrices for (a1, a2†) of OPA A and (a1', a2'†) of OPA A'.

    These follow the conventional +S form; the Heisenberg map generated by
    ``evolution_oracle`` has the opposite sign of S (see ``heisenberg_matrices``).
    """
    C, S, St = params.C, params.S, params.s_tilde
    return np.array([[C, S], [S, C]], dtype=complex), np.array([[C, St], [np.conj(St), C]], dtype=complex)


def heisenberg_matrices(params: AmplifierParams):
    """Bogoliubov matrices of the unitary actually applied by the oracle: U† a U."""
    m_a, m_ap = bogoliubov_coefficients(params)
    flip = np.array([[1, -1], [-1, 1]])
    return m_a * flip, m_ap * flip


def coherent_gain(alpha_h: complex, alpha_v: complex, params: AmplifierParams) -> np.ndarray:
    """Mean photon number in (1h, 1v, 2h, 2v) for coherent light on k1, vacuum on k2."""
    m_a, m_ap = bogoliubov_coefficients(params)

    def pair(m, seed):
        # <a1(t)† a1(t)> and <a2(t)† a2(t)>; cross moments vanish for coherent ⊗ vacuum
        n_signal = abs(m[0, 0]) ** 2 * abs(seed) ** 2 + abs(m[0, 1]) ** 2
        n_idler = abs(m[1, 0]) ** 2 * (abs(seed) ** 2 + 1)
        return n_signal, n_idler

    n1h, n2v = pair(m_a, alpha_h)
    n1v, n2h = pair(m_ap, alpha_v)
    return np.array([n1h, n1v, n2h, n2v], dtype=float)


def degenerate_evolve(qubit: PolarizationQubit, params: AmplifierParams, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    """Collinear two-mode amplifier with pair operator ``a_par a_perp``."""
    C, G = params.C, params.gamma
    amps = {}
    n = 0
    while 1 + 2 * n <= cutoff:
        coeff = C**-2 * (-G) ** n * sqrt(n + 1)
        if qubit.alpha:
            amps[(n + 1, n)] = amps.get((n + 1, n), 0) + qubit.alpha * coeff
        if qubit.beta:
            amps[(n, n + 1)] = amps.get((n, n + 1), 0) + qubit.beta * coeff
        n += 1
    stored = sum(abs(a) ** 2 for a in amps.values())
    return StateVector(amps, cutoff=cutoff, leakage=max(0.0, 1.0 - stored), modes=DEGENERATE_MODES)


def _charges(ket: tuple) -> tuple:
    if len(ket) == 4:
        return (ket[0] - ket[3], ket[1] - ket[2])
    return (ket[0] - ket[1],)


def _sector_basis(charge: tuple, limit: int) -> list:
    """Kets sharing the conserved pair-number differences ``charge``, total <= limit."""
    kets = []
    if len(charge) == 2:
        d1, d2 = charge
        x = max(0, -d1)
        while d1 + 2 * x + d2 + 2 * max(0, -d2) <= limit:
            y = max(0, -d2)
            while d1 + d2 + 2 * x + 2 * y <= limit:
                kets.append((d1 + x, d2 + y, y, x))
                y += 1
            x += 1
    else:
        (d,) = charge
        x = max(0, -d)
        while d + 2 * x <= limit:
            kets.append((d + x, x))
            x += 1
    return sorted(kets, key=lambda k: (sum(k), k))


def _generator(basis, params: AmplifierParams) -> np.ndarray:
    g, phi = params.g, params.phi
    if len(basis[0]) == 4:
        pair = pair_lowering_matrix(basis, 0, 3) - np.exp(1j * phi) * pair_lowering_matrix(basis, 1, 2)
    else:
        pair = pair_lowering_matrix(basis, 0, 1)
    k = g * (pair - pair.conj().T)
    return k.toarray()


def _oracle_pad(g: float) -> int:
    G = np.tanh(g)
    if G < 1e-3:
        return 8
    return int(min(80, ceil(18 * log(10) / (-2 * log(G))) + 6))


def evolution_oracle(
    state: StateVector, params: AmplifierParams, cutoff: int | None = None, pad_pairs: int | None = None
) -> StateVector:
    """Evolve ``state`` by dense matrix exponentiation of the amplifier generator.

    Four-mode states use the two-OPA interaction; two-mode states (modes
    ``par``, ``perp``) use the degenerate single-OPA interaction. Each
    conserved-charge block of the input is exponentiated on a basis padded by
    ``pad_pairs`` extra photon pairs beyond ``cutoff`` so that truncation of
    the generator does not feed back into the retained amplitudes.
    """
    if cutoff is None:
        cutoff = state.cutoff
    pad = _oracle_pad(params.g) if pad_pairs is None else pad_pairs
    limit = cutoff + 2 * pad
    blocks: dict = {}
    for ket, amp in state.amplitudes.items():
        blocks.setdefault(_charges(ket), {})[ket] = amp
    out = StateVector({}, cutoff=cutoff, leakage=state.leakage, modes=state.modes)
    for charge, amps in sorted(blocks.items()):
        basis = _sector_basis(charge, limit)
        if len(basis) > ORACLE_MAX_BASIS:
            raise ResourceLimitError(
                f"oracle basis of {len(basis)} kets exceeds {ORACLE_MAX_BASIS}; lower cutoff or gain"
            )
        vec = StateVector(amps, cutoff=limit, modes=state.modes).dense(basis)
        evolved = expm(_generator(basis, params)) @ vec
        out = out + StateVector.from_dense(evolved, basis, cutoff, modes=state.modes)
    return out
