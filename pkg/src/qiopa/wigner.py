"""Phase-space picture of the amplified field.

Coordinates follow the two pair channels of the amplifier: ``alpha1, alpha2``
belong to the pair (1h, 2v) and ``beta1, beta2`` to the pair (1v, 2h).  The
closed form below is real, reaches -16/pi^4 at the origin and is the
single-photon-injected counterpart of the Gaussian (vacuum-injected) envelope.

Convention notes, documented rather than changed: the closed form is negative
at the origin, which a standard Wigner function only is for states with odd
total parity.  It coincides with the displaced-parity Wigner function of our
injected state after ``alpha2 -> -alpha2`` and ``beta2 -> exp(i phi) beta2``
(see :func:`to_state_coordinates`), with the injected qubit
``(exp(-i phi), 1) / sqrt(2)``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .dynamics import AmplifierParams, PolarizationQubit
from .errors import AccuracyWarning, InvalidArgumentsError, ResourceLimitError
from .fock import StateVector, partial_trace

COORDINATES = ("alpha1", "alpha2", "beta1", "beta2")
# state mode carried by each phase-space coordinate, in the (1h, 1v, 2h, 2v) order
COORDINATE_MODES = (0, 3, 1, 2)
PEAK = 4 / pi**2
MAX_SCAN_POINTS = 10**6
DISPLACEMENT_LIMIT = 2.0


@dataclass(frozen=True)
class PhasePoint:
    alpha1: complex = 0j
    alpha2: complex = 0j
    beta1: complex = 0j
    beta2: complex = 0j

    def squeezed(self, g: float) -> tuple:
        """Squeezed variables (plus_A, minus_A, plus_A', minus_A')."""
        return (
            *_squeeze_pair(self.alpha1, self.alpha2, g),
            *_squeeze_pair(self.beta1, self.beta2, g),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.beta1, self.beta2], dtype=complex)


def _squeeze_pair(first, second, g):
    plus = (first + np.conj(second)) * np.exp(-g)
    minus = 1j * (first - np.conj(second)) * np.exp(g)
    return plus, minus


def envelope(plus, minus):
    """Gaussian factor of one pair channel, 4/pi^2 at its peak."""
    return PEAK * np.exp(-(np.abs(plus) ** 2 + np.abs(minus) ** 2))


def interference(plus, minus):
    return (plus - 1j * minus) / sqrt(2)


def _closed_form(a1, a2, b1, b2, params: AmplifierParams):
    pa, ma = _squeeze_pair(a1, a2, params.g)
    pb, mb = _squeeze_pair(b1, b2, params.g)
    gauss = envelope(pa, ma) * envelope(pb, mb)
    bracket = 1 - np.abs(np.exp(1j * params.phi) * interference(pa, ma) + interference(pb, mb)) ** 2
    return -gauss * bracket


def wigner_closed_form(point: PhasePoint, params: AmplifierParams) -> float:
    """Closed-form Wigner value of the injected amplifier at one phase-space point."""
    return float(_closed_form(point.alpha1, point.alpha2, point.beta1, point.beta2, params))


def spdc_wigner(point: PhasePoint, params: AmplifierParams) -> float:
    """Vacuum-injected counterpart: the product of the two Gaussian envelopes."""
    p = point.squeezed(params.g)
    return float(envelope(p[0], p[1]) * envelope(p[2], p[3]))


# ----------------------------------------------------------------------------
# Characteristic function of the closed form, via Gaussian moments over R^8.


def _real_maps(params: AmplifierParams):
    """Linear maps from x = (Re a1, Im a1, Re a2, Im a2, Re b1, ...) to the complex variables."""
    cols = []
    for k in range(8):
        x = np.zeros(8)
        x[k] = 1.0
        a1, a2, b1, b2 = x[0::2] + 1j * x[1::2]
        pa, ma = _squeeze_pair(a1, a2, params.g)
        pb, mb = _squeeze_pair(b1, b2, params.g)
        bright = np.exp(1j * params.phi) * interference(pa, ma) + interference(pb, mb)
        cols.append([pa, ma, pb, mb, bright])
    return np.array(cols, dtype=complex).T


def _quadratic_forms(params: AmplifierParams):
    maps = _real_maps(params)
    gauss = sum(np.real(np.outer(np.conj(row), row)) for row in maps[:4])
    bright = np.real(np.outer(np.conj(maps[4]), maps[4]))
    return gauss, bright


def _wave_vector(args) -> np.ndarray:
    """Fourier vector k with exp(conj(eta) a - eta conj(a)) = exp(i k . x), per coordinate."""
    k = np.zeros(8)
    for j, eta in enumerate(args):
        k[2 * j] = -2 * np.imag(eta)
        k[2 * j + 1] = 2 * np.real(eta)
    return k


def closed_form_characteristic(params: AmplifierParams, eta1=0j, eta2=0j, xi1=0j, xi2=0j, injected=True) -> float:
    """Symplectic Fourier transform of the closed form (or of its Gaussian envelope).

    Arguments pair with the coordinates alpha1, alpha2, beta1, beta2.  The
    result is real because the closed form is even in phase space.
    """
    gauss, bright = _quadratic_forms(params)
    inv = np.linalg.inv(gauss)
    k = _wave_vector((eta1, eta2, xi1, xi2))
    base = PEAK**2 * pi**4 / sqrt(np.linalg.det(gauss)) * np.exp(-k @ inv @ k / 4)
    if not injected:
        return float(base)
    moment = np.trace(bright @ inv) / 2 - (k @ inv @ bright @ inv @ k) / 4
    return float(-base * (1 - moment))


# ----------------------------------------------------------------------------
# Numeric side: displacement operators on a truncated Fock basis.


def displacement_matrix(alpha: complex, rows: int, cols: int | None = None) -> np.ndarray:
    """Exact matrix elements <m|D(alpha)|n> for m < rows, n < cols (generalized Laguerre form)."""
    cols = rows if cols is None else cols
    m = np.arange(rows)[:, None]
    n = np.arange(cols)[None, :]
    x = abs(alpha) ** 2
    lo, hi = np.minimum(m, n), np.maximum(m, n)
    order = hi - lo
    with np.errstate(divide="ignore", invalid="ignore"):
        log_scale = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) - x / 2
        lag = eval_genlaguerre(lo, order, x)
        power_up = np.where(order == 0, 1.0 + 0j, alpha ** order)
        power_down = np.where(order == 0, 1.0 + 0j, (-np.conj(alpha)) ** order)
    phase = np.where(m >= n, power_up, power_down)
    return np.exp(log_scale) * lag * phase


def _as_tensor(state: StateVector) -> np.ndarray:
    dim = state.cutoff + 1
    tensor = np.zeros((dim,) * len(state.modes), dtype=complex)
    for ket, amp in state.amplitudes.items():
        if max(ket) <= state.cutoff:
            tensor[ket] = amp
    return tensor


def _apply_along(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    moved = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


def _displacements_by_mode(eta1, eta2, xi1, xi2) -> dict:
    return dict(zip(COORDINATE_MODES, (eta1, eta2, xi1, xi2)))


def _check_accuracy(state: StateVector, args):
    big = max(abs(a) for a in args)
    if big > DISPLACEMENT_LIMIT:
        warnings.warn(f"displacement {big:.3g} exceeds {DISPLACEMENT_LIMIT}; truncation bias likely", AccuracyWarning, stacklevel=3)
    if state.leakage >= 1e-6:
        warnings.warn(f"state leakage {state.leakage:.2e} biases the characteristic function", AccuracyWarning, stacklevel=3)


def characteristic_oracle(state: StateVector, eta1=0j, eta2=0j, xi1=0j, xi2=0j) -> complex:
    """<psi| D D D D |psi> on the truncated basis.

    ``eta1, eta2`` displace modes 1h, 2v and ``xi1, xi2`` displace 1v, 2h.
    """
    if len(state.modes) != 4:
        raise InvalidArgumentsError("characteristic_oracle expects a four-mode state")
    _check_accuracy(state, (eta1, eta2, xi1, xi2))
    psi = _as_tensor(state)
    out = psi
    for mode, eta in _displacements_by_mode(eta1, eta2, xi1, xi2).items():
        if eta != 0:
            out = _apply_along(out, displacement_matrix(eta, psi.shape[0]), mode)
    return complex(np.vdot(psi, out))


def wigner_from_state(state: StateVector, point: PhasePoint, pad: int = 24) -> float:
    """Displaced-parity Wigner value (2/pi)^4 <D P D^dag> at a point in state coordinates.

    Coordinates map to modes as in :func:`characteristic_oracle`.  The shifted
    state is kept on ``pad`` extra photons per mode so it is not cropped.
    """
    _check_accuracy(state, tuple(point.as_array()))
    psi = _as_tensor(state)
    dim = psi.shape[0]
    out = psi
    for mode, alpha in zip(COORDINATE_MODES, point.as_array()):
        out = _apply_along(out, displacement_matrix(-alpha, dim + pad, out.shape[mode]), mode)
    n = np.arange(dim + pad)
    parity = (-1.0) ** (n[:, None, None, None] + n[None, :, None, None] + n[None, None, :, None] + n[None, None, None, :])
    return float((2 / pi) ** 4 * np.sum(parity * np.abs(out) ** 2))


def matching_qubit(params: AmplifierParams) -> PolarizationQubit:
    """Injected qubit whose state reproduces the closed form."""
    return PolarizationQubit(np.exp(-1j * params.phi) / sqrt(2), 1 / sqrt(2))


def to_state_coordinates(point: PhasePoint, params: AmplifierParams) -> PhasePoint:
    """Map closed-form coordinates onto the coordinates used for our Fock states."""
    return PhasePoint(point.alpha1, -point.alpha2, point.beta1, np.exp(-1j * params.phi) * point.beta2)


def to_state_arguments(args, params: AmplifierParams) -> tuple:
    eta1, eta2, xi1, xi2 = args
    return eta1, -eta2, xi1, np.exp(-1j * params.phi) * xi2


# ----------------------------------------------------------------------------
# Scans over a two-coordinate plane.


@dataclass(frozen=True)
class ScanPlane:
    """Two active complex coordinates swept over a square lattice; the rest are pinned."""

    first: str = "alpha1"
    second: str = "beta1"
    lo: float = -1.0
    hi: float = 1.0
    step: float = 0.25
    pinned: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in (self.first, self.second, *self.pinned):
            if name not in COORDINATES:
                raise InvalidArgumentsError(f"unknown coordinate {name!r}; expected one of {COORDINATES}")
        if self.first == self.second:
            raise InvalidArgumentsError("scan plane needs two distinct coordinates")
        if self.step <= 0 or self.hi < self.lo:
            raise InvalidArgumentsError("scan range needs lo <= hi and step > 0")

    def axis(self) -> np.ndarray:
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(count)

    def size(self) -> int:
        return len(self.axis()) ** 4


@dataclass
class NegativityResult:
    min_W: float
    negative_fraction: float
    rows: np.ndarray  # columns: coord1_re, coord1_im, coord2_re, coord2_im, W


def negativity_scan(plane: ScanPlane, params: AmplifierParams) -> NegativityResult:
    if plane.size() > MAX_SCAN_POINTS:
        raise ResourceLimitError(f"scan has {plane.size()} points; limit is {MAX_SCAN_POINTS}")
    ax = plane.axis()
    r1, i1, r2, i2 = (g.ravel() for g in np.meshgrid(ax, ax, ax, ax, indexing="ij"))
    coords = {name: np.full(r1.shape, complex(plane.pinned.get(name, 0))) for name in COORDINATES}
    coords[plane.first] = r1 + 1j * i1
    coords[plane.second] = r2 + 1j * i2
    values = _closed_form(coords["alpha1"], coords["alpha2"], coords["beta1"], coords["beta2"], params)
    values = np.real_if_close(values)
    rows = np.column_stack([r1, i1, r2, i2, values])
    return NegativityResult(float(values.min()), float(np.mean(values < 0)), rows)


def write_scan_csv(result: NegativityResult, handle, header_comment: str | None = None) -> None:
    if header_comment:
        handle.write(f"# {header_comment}\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["coord1_re", "coord1_im", "coord2_re", "coord2_im", "W"])
    for row in result.rows:
        writer.writerow([f"{v:.12g}" for v in row])


# ----------------------------------------------------------------------------
# Marginal over the (1v, 2h) coordinates: a 4-dim check that stays tractable.


def pair_marginal_closed_form(alpha1, alpha2, params: AmplifierParams) -> float:
    """Closed form integrated over beta1, beta2, in closed-form coordinates.

    The beta block is Gaussian, so its interference term averages to a
    constant and the cross term with the alpha block vanishes.
    """
    gauss, bright = _quadratic_forms(params)
    block_b = gauss[4:, 4:]
    mean_b = np.trace(bright[4:, 4:] @ np.linalg.inv(block_b)) / 2
    weight_b = pi**2 / sqrt(np.linalg.det(block_b))
    pa, ma = _squeeze_pair(alpha1, alpha2, params.g)
    return float(-PEAK * weight_b * envelope(pa, ma) * (1 - np.abs(interference(pa, ma)) ** 2 - mean_b))


def pair_marginal_from_state(state: StateVector, points, extent: float = 4.0, step: float = 0.4) -> np.ndarray:
    """Fourier transform of the numeric characteristic function on the (eta1, eta2) plane.

    Integrates pi^-4 chi(eta) exp(eta conj(alpha) - conj(eta) alpha) over both
    complex arguments with a trapezoid lattice of spacing ``step`` on [-extent, extent]^4;
    ``points`` are (alpha1, alpha2) pairs in state coordinates.
    """
    rho = partial_trace(state, ("1h", "2v"))
    dim = state.cutoff + 1
    dense = np.zeros((dim, dim, dim, dim), dtype=complex)
    for (r1, r2), row in zip(rho.basis, rho.entries):
        for (c1, c2), value in zip(rho.basis, row):
            dense[r1, r2, c1, c2] = value
    axis = np.arange(-extent, extent + step / 2, step)
    grid = (axis[:, None] + 1j * axis[None, :]).ravel()
    disp = np.array([displacement_matrix(eta, dim) for eta in grid])
    # chi[i, j] = Tr(rho D(grid_i) x D(grid_j))
    half = np.einsum("abcd,ica->ibd", dense, disp, optimize=True)
    chi = np.einsum("ibd,jdb->ij", half, disp, optimize=True)
    out = []
    for a1, a2 in points:
        k1 = np.exp(grid * np.conj(a1) - np.conj(grid) * a1)
        k2 = np.exp(grid * np.conj(a2) - np.conj(grid) * a2)
        out.append(np.real(k1 @ chi @ k2) * step**4 / pi**4)
    return np.array(out)
