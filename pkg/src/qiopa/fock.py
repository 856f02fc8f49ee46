"""Sparse multimode Fock-space kernel.

States are stored as a mapping from occupation tuples to complex amplitudes.
Mode order for the four-mode amplifier is fixed as ``(1h, 1v, 2h, 2v)``:
OPA A couples ``1h`` with ``2v`` and OPA A' couples ``1v`` with ``2h``.

Truncation is never hidden. Any norm² removed because a ket would exceed the
photon-number cutoff, or because its amplitude fell below the pruning
threshold, is added to ``StateVector.leakage``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from math import comb, factorial, sqrt
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import sparse

from .errors import InvalidModeError, NotAStateError

MODES = ("1h", "1v", "2h", "2v")
SPATIAL = {"k1": (0, 1), "k2": (2, 3)}
DEFAULT_CUTOFF = 12
PRUNE = 1e-15


class OccupationKet(NamedTuple):
    n1h: int
    n1v: int
    n2h: int
    n2v: int


def _as_ket(ket) -> tuple:
    return tuple(int(n) for n in ket)


@dataclass(frozen=True)
class StateVector:
    """Truncated superposition of occupation kets.

    ``cutoff`` bounds the total photon number of every stored ket and
    ``leakage`` records the norm² that was discarded to respect it.
    """

    amplitudes: Mapping[tuple, complex]
    cutoff: int = DEFAULT_CUTOFF
    leakage: float = 0.0
    modes: tuple = MODES

    def __post_init__(self):
        amps = {}
        for ket, amp in self.amplitudes.items():
            ket = _as_ket(ket)
            if len(ket) != len(self.modes):
                raise InvalidModeError(f"ket {ket} does not match modes {self.modes}")
            if min(ket) < 0:
                raise ValueError(f"negative occupation in {ket}")
            if sum(ket) > self.cutoff:
                raise ValueError(f"ket {ket} exceeds cutoff {self.cutoff}")
            if amp != 0:
                amps[ket] = complex(amp)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "modes", tuple(self.modes))

    @classmethod
    def basis(cls, ket, cutoff=DEFAULT_CUTOFF, modes=MODES) -> "StateVector":
        return cls({_as_ket(ket): 1.0}, cutoff=cutoff, modes=modes)

    @classmethod
    def vacuum(cls, cutoff=DEFAULT_CUTOFF, modes=MODES) -> "StateVector":
        return cls.basis((0,) * len(modes), cutoff=cutoff, modes=modes)

    def __len__(self):
        return len(self.amplitudes)

    def __iter__(self):
        return iter(self.amplitudes.items())

    def __getitem__(self, ket) -> complex:
        return self.amplitudes.get(_as_ket(ket), 0j)

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def kets(self) -> list:
        return sorted(self.amplitudes)

    def _compatible(self, other: "StateVector"):
        if self.modes != other.modes:
            raise InvalidModeError(f"mode mismatch: {self.modes} vs {other.modes}")

    def __add__(self, other: "StateVector") -> "StateVector":
        self._compatible(other)
        out = dict(self.amplitudes)
        for ket, amp in other.amplitudes.items():
            out[ket] = out.get(ket, 0j) + amp
        return StateVector(
            out,
            cutoff=max(self.cutoff, other.cutoff),
            leakage=self.leakage + other.leakage,
            modes=self.modes,
        )

    def __mul__(self, scalar) -> "StateVector":
        scalar = complex(scalar)
        return StateVector(
            {k: scalar * a for k, a in self.amplitudes.items()},
            cutoff=self.cutoff,
            leakage=abs(scalar) ** 2 * self.leakage,
            modes=self.modes,
        )

    __rmul__ = __mul__

    def select(self, keep: Callable[[tuple], bool]) -> "StateVector":
        """Projection onto the kets accepted by ``keep`` (no renormalization)."""
        return StateVector(
            {k: a for k, a in self.amplitudes.items() if keep(k)},
            cutoff=self.cutoff,
            leakage=self.leakage,
            modes=self.modes,
        )

    def dense(self, basis: Sequence[tuple]) -> np.ndarray:
        index = {k: i for i, k in enumerate(basis)}
        vec = np.zeros(len(basis), dtype=complex)
        for ket, amp in self.amplitudes.items():
            vec[index[ket]] = amp
        return vec

    @classmethod
    def from_dense(cls, vec, basis, cutoff, leakage=0.0, modes=MODES) -> "StateVector":
        amps = {}
        for ket, amp in zip(basis, vec):
            if sum(ket) > cutoff:
                leakage += abs(amp) ** 2
            elif abs(amp) < PRUNE:
                leakage += abs(amp) ** 2
            else:
                amps[tuple(ket)] = complex(amp)
        return cls(amps, cutoff=cutoff, leakage=float(leakage), modes=modes)

    def to_json(self) -> str:
        doc = {
            "modes": list(self.modes),
            "cutoff": self.cutoff,
            "leakage": self.leakage,
            "amplitudes": [
                {"ket": list(k), "re": self.amplitudes[k].real, "im": self.amplitudes[k].imag}
                for k in self.kets()
            ],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        doc = json.loads(text)
        amps = {tuple(e["ket"]): complex(e["re"], e["im"]) for e in doc["amplitudes"]}
        return cls(amps, cutoff=doc["cutoff"], leakage=doc["leakage"], modes=tuple(doc["modes"]))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian operator on the two polarization modes of one spatial mode."""

    entries: np.ndarray
    basis: tuple
    modes: tuple = ("1h", "1v")
    leakage: float = 0.0

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (len(self.basis), len(self.basis)):
            raise ValueError("entries shape does not match basis")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "basis", tuple(tuple(b) for b in self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def aligned(self, basis: Sequence[tuple]) -> np.ndarray:
        """Entries re-expressed on ``basis`` (a superset of the stored one)."""
        index = {b: i for i, b in enumerate(basis)}
        out = np.zeros((len(basis), len(basis)), dtype=complex)
        pos = [index[b] for b in self.basis]
        out[np.ix_(pos, pos)] = self.entries
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "modes": list(self.modes),
                "leakage": self.leakage,
                "basis": [list(b) for b in self.basis],
                "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        doc = json.loads(text)
        entries = np.array(doc["re"]) + 1j * np.array(doc["im"])
        return cls(entries, tuple(map(tuple, doc["basis"])), tuple(doc["modes"]), doc["leakage"])


def frobenius_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    basis = sorted(set(a.basis) | set(b.basis))
    return float(np.linalg.norm(a.aligned(basis) - b.aligned(basis)))


def mode_index(state: StateVector, mode) -> int:
    if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool):
        if 0 <= mode < len(state.modes):
            return int(mode)
    elif mode in state.modes:
        return state.modes.index(mode)
    raise InvalidModeError(f"unknown mode {mode!r}; expected one of {state.modes}")


def _ladder(state: StateVector, mode, raising: bool) -> StateVector:
    m = mode_index(state, mode)
    out: dict = {}
    leak = state.leakage
    for ket, amp in state.amplitudes.items():
        n = ket[m]
        if raising:
            new, coeff = n + 1, sqrt(n + 1)
        else:
            if n == 0:
                continue
            new, coeff = n - 1, sqrt(n)
        value = coeff * amp
        target = ket[:m] + (new,) + ket[m + 1 :]
        if sum(target) > state.cutoff:
            leak += abs(value) ** 2
            continue
        out[target] = out.get(target, 0j) + value
    for ket in [k for k, a in out.items() if abs(a) < PRUNE]:
        leak += abs(out.pop(ket)) ** 2
    return StateVector(out, cutoff=state.cutoff, leakage=leak, modes=state.modes)


def create(state: StateVector, mode) -> StateVector:
    """Apply the creation operator of ``mode`` (label or index)."""
    return _ladder(state, mode, raising=True)


def annihilate(state: StateVector, mode) -> StateVector:
    """Apply the annihilation operator of ``mode``; the vacuum maps to zero."""
    return _ladder(state, mode, raising=False)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    a._compatible(b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for ket in small.amplitudes:
        if ket in large.amplitudes:
            total += a.amplitudes[ket].conjugate() * b.amplitudes[ket]
    return total


def _kept_modes(state: StateVector, keep) -> tuple:
    if isinstance(keep, str):
        if keep not in SPATIAL:
            raise InvalidModeError(f"spatial mode must be one of {tuple(SPATIAL)}, got {keep!r}")
        return SPATIAL[keep]
    return tuple(mode_index(state, m) for m in keep)


def partial_trace(state: StateVector, keep="k1") -> DensityMatrix:
    """Reduced density matrix on the kept spatial mode (``"k1"`` or ``"k2"``).

    No renormalization: the trace equals the stored norm² of ``state``.
    """
    kept = _kept_modes(state, keep)
    traced = tuple(i for i in range(len(state.modes)) if i not in kept)
    groups: dict = {}
    for ket, amp in state.amplitudes.items():
        env = tuple(ket[i] for i in traced)
        sub = tuple(ket[i] for i in kept)
        groups.setdefault(env, {})[sub] = amp
    basis = sorted({sub for g in groups.values() for sub in g})
    index = {b: i for i, b in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for g in groups.values():
        vec = np.zeros(len(basis), dtype=complex)
        for sub, amp in g.items():
            vec[index[sub]] = amp
        nz = np.flatnonzero(vec)
        rho[np.ix_(nz, nz)] += np.outer(vec[nz], vec[nz].conj())
    modes = tuple(state.modes[i] for i in kept)
    return DensityMatrix(rho, tuple(basis), modes, state.leakage)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr rho log2 rho, in bits."""
    evals = np.linalg.eigvalsh(rho.entries)
    if evals.size and evals.min() < -1e-8:
        raise NotAStateError(f"negative eigenvalue {evals.min():.3e}")
    evals = evals[evals > 1e-14]
    return float(max(0.0, -np.sum(evals * np.log2(evals))))


def _polarization_vector(qubit, polarization: str) -> np.ndarray:
    v = np.asarray(getattr(qubit, "vector", qubit), dtype=complex)
    if polarization in ("pi", "π"):
        return v
    if polarization in ("perp", "π⊥"):
        return np.array([-v[1].conjugate(), v[0].conjugate()])
    raise ValueError(f"polarization must be 'pi' or 'perp', got {polarization!r}")


def number_operator(basis: Sequence[tuple], vector) -> np.ndarray:
    """Matrix of a_v† a_v on a two-mode basis, a_v† = v[0] a_h† + v[1] a_v†."""
    index = {tuple(b): i for i, b in enumerate(basis)}
    n = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, (nh, nv) in enumerate(basis):
        occ = (nh, nv)
        for q in (0, 1):
            if occ[q] == 0:
                continue
            lowered = list(occ)
            lowered[q] -= 1
            for p in (0, 1):
                raised = list(lowered)
                raised[p] += 1
                row = index.get(tuple(raised))
                if row is None:
                    continue
                amp = sqrt(occ[q]) * sqrt(raised[p])
                n[row, col] += vector[p] * np.conj(vector[q]) * amp
    return n


def number_expectation(rho: DensityMatrix, polarization: str, qubit) -> float:
    """Tr(rho n) for the mode polarized along the qubit ('pi') or its antipode ('perp')."""
    v = _polarization_vector(qubit, polarization)
    n = number_operator(rho.basis, v)
    return float(np.trace(rho.entries @ n).real)


def _rotate_pair(amplitudes: dict, pair: tuple, u: np.ndarray) -> dict:
    # a_h† -> u00 a_h† + u10 a_v†, a_v† -> u01 a_h† + u11 a_v†
    h, v = pair
    out: dict = {}
    for ket, amp in amplitudes.items():
        nh, nv = ket[h], ket[v]
        norm = 1.0 / sqrt(factorial(nh) * factorial(nv))
        for k1, k2 in product(range(nh + 1), range(nv + 1)):
            coeff = (
                comb(nh, k1) * u[0, 0] ** k1 * u[1, 0] ** (nh - k1)
                * comb(nv, k2) * u[0, 1] ** k2 * u[1, 1] ** (nv - k2)
            )
            if coeff == 0:
                continue
            p, q = k1 + k2, nh + nv - k1 - k2
            target = list(ket)
            target[h], target[v] = p, q
            target = tuple(target)
            out[target] = out.get(target, 0j) + amp * coeff * norm * sqrt(factorial(p) * factorial(q))
    return out


def rotate_polarization(state: StateVector, u, pairs: Iterable[tuple] | None = None) -> StateVector:
    """Apply the same passive 2x2 unitary ``u`` to the (h, v) pair of each spatial mode.

    A single photon with polarization vector ``v`` is mapped to ``u @ v``.
    """
    u = np.asarray(u, dtype=complex)
    if pairs is None:
        pairs = [(i, i + 1) for i in range(0, len(state.modes), 2)]
    amps = dict(state.amplitudes)
    for pair in pairs:
        amps = _rotate_pair(amps, pair, u)
    return StateVector.from_dense(
        list(amps.values()), list(amps.keys()), state.cutoff, state.leakage, state.modes
    )


def fock_basis(n_modes: int, cutoff: int, keep: Callable[[tuple], bool] | None = None) -> list:
    """All kets with total photon number <= cutoff, ascending total then lexicographic."""
    kets = [k for k in product(range(cutoff + 1), repeat=n_modes) if sum(k) <= cutoff]
    if keep is not None:
        kets = [k for k in kets if keep(k)]
    return sorted(kets, key=lambda k: (sum(k), k))


def lowering_matrix(basis: Sequence[tuple], mode: int) -> sparse.csr_matrix:
    """Annihilation operator of ``mode`` restricted to ``basis``."""
    index = {tuple(k): i for i, k in enumerate(basis)}
    rows, cols, vals = [], [], []
    for col, ket in enumerate(basis):
        n = ket[mode]
        if n == 0:
            continue
        target = tuple(ket[:mode]) + (n - 1,) + tuple(ket[mode + 1 :])
        row = index.get(target)
        if row is not None:
            rows.append(row)
            cols.append(col)
            vals.append(sqrt(n))
    dim = len(basis)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


def pair_lowering_matrix(basis: Sequence[tuple], m1: int, m2: int) -> sparse.csr_matrix:
    """The product a_m1 a_m2 restricted to ``basis`` (m1 != m2).

    Built directly so that it stays exact on bases closed only under pair
    creation and annihilation.
    """
    index = {tuple(k): i for i, k in enumerate(basis)}
    rows, cols, vals = [], [], []
    for col, ket in enumerate(basis):
        if ket[m1] == 0 or ket[m2] == 0:
            continue
        target = list(ket)
        target[m1] -= 1
        target[m2] -= 1
        row = index.get(tuple(target))
        if row is not None:
            rows.append(row)
            cols.append(col)
            vals.append(sqrt(ket[m1] * ket[m2]))
    dim = len(basis)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
