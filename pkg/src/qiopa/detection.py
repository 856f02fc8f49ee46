"""Monte-Carlo model of the self-injected coincidence experiment.

A trial is one heralded pulse that lands in the coincidence-eligible
photon-number sector.  Trials are drawn from that sector of the mixture

    overlap * (amplified injection) + (1 - overlap) * (free SPDC + unamplified injected photon)

so every sampled trial can contribute to a coincidence.  ``sector_prob`` is the
probability per heralded pulse of landing in the sector; rates per pulse are
``counts / trials * sector_prob``.  Photons are then routed and detected with
independent Bernoulli thinning.

Clone mode: k1 passes a beamsplitter; arm a has a polarizer along the injected
qubit (detector Da), arm b a polarizing splitter (Db along the qubit, Db* along
its antipode); D2 watches all of k2 and DT is the herald.  Signal is
[D2, DT, Da, Db], noise [D2, DT, Da, Db*], and R = signal / (2 * noise).

U-NOT mode: k1 is split without polarization analysis (Da, Db) and k2 passes a
polarizing splitter, D2 along the antipode, D2* along the qubit.  Signal is
[D2, DT, Da, Db], noise [D2*, DT, Da, Db], and R* = signal / noise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import product
from math import comb, sqrt

import numpy as np

from .channels import FidelityReport, fidelity_from_ratio, unot_from_ratio
from .dynamics import AmplifierParams, PolarizationQubit, evolution_oracle, evolve_qubit, spdc_output
from .errors import InsufficientStatisticsError, InvalidArgumentsError
from .fock import StateVector, rotate_polarization

DETECTORS = ("Da", "Db", "Db*", "D2", "D2*", "DT")
RUN_MODES = ("clone", "unot")
POSTSELECTION = ("exact", "threshold")
THRESHOLD_CUTOFF = 8


@dataclass(frozen=True)
class DetectorModel:
    qe: float | dict = 1.0
    dark_prob: float = 0.0
    beamsplitter_ratio: float = 0.5

    def __post_init__(self):
        effs = self.qe.values() if isinstance(self.qe, dict) else [self.qe]
        if isinstance(self.qe, dict) and set(self.qe) - set(DETECTORS):
            raise InvalidArgumentsError(f"unknown detectors {sorted(set(self.qe) - set(DETECTORS))}")
        for name, value in [("qe", v) for v in effs] + [("dark_prob", self.dark_prob), ("beamsplitter_ratio", self.beamsplitter_ratio)]:
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentsError(f"{name} must lie in [0, 1], got {value}")

    def efficiency(self, detector: str) -> float:
        if isinstance(self.qe, dict):
            return float(self.qe.get(detector, 1.0))
        return float(self.qe)

    def fire_probability(self, detector: str, photons):
        """Probability that ``detector`` clicks given ``photons`` incident photons."""
        miss = (1.0 - self.efficiency(detector)) ** np.asarray(photons)
        return 1.0 - miss * (1.0 - self.dark_prob)


@dataclass(frozen=True)
class ExperimentConfig:
    qubit: PolarizationQubit
    params: AmplifierParams
    trials: int = 10**6
    seed: int = 0
    z_offset: float = 0.0
    z_sigma: float = 1.0
    double_injection: float = 0.0  # relative weight of two-photon injection per heralded pulse
    postselection: str = "exact"

    def __post_init__(self):
        if self.trials < 0:
            raise InvalidArgumentsError(f"trials must be >= 0, got {self.trials}")
        if self.z_sigma <= 0:
            raise InvalidArgumentsError(f"z_sigma must be > 0, got {self.z_sigma}")
        if self.double_injection < 0:
            raise InvalidArgumentsError("double_injection weight must be >= 0")
        if self.postselection not in POSTSELECTION:
            raise InvalidArgumentsError(f"postselection must be one of {POSTSELECTION}")

    def with_offset(self, z: float, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(
            self.qubit, self.params, self.trials, seed, z, self.z_sigma, self.double_injection, self.postselection
        )

    def to_dict(self) -> dict:
        return {
            "qubit": [self.qubit.alpha.real, self.qubit.alpha.imag, self.qubit.beta.real, self.qubit.beta.imag],
            "gain": self.params.g,
            "phi": self.params.phi,
            "trials": self.trials,
            "seed": self.seed,
            "z_offset": self.z_offset,
            "z_sigma": self.z_sigma,
            "double_injection": self.double_injection,
            "postselection": self.postselection,
        }


def injection_overlap(z_offset: float, z_sigma: float) -> float:
    """Gaussian overlap between pump and injected pulse; 1 on resonance, 0 far off."""
    if z_sigma <= 0:
        raise InvalidArgumentsError(f"z_sigma must be > 0, got {z_sigma}")
    return float(np.exp(-(z_offset**2) / (2 * z_sigma**2)))


# ----------------------------------------------------------------------------
# Sector distributions in the qubit-aligned frame: counts (k1 psi, k1 perp, k2 psi, k2 perp)


@dataclass
class Component:
    configs: np.ndarray  # (n, 4) photon counts
    probs: np.ndarray  # conditional on the sector
    weight: float  # probability of the sector for this component


def _in_sector(counts, postselection: str) -> bool:
    k1, k2 = counts[0] + counts[1], counts[2] + counts[3]
    if postselection == "exact":
        return k1 == 2 and k2 == 1
    return k1 >= 2 and k2 >= 1


def _component(state: StateVector, qubit: PolarizationQubit, injected_psi: int, postselection: str) -> Component:
    aligned = rotate_polarization(state, qubit.frame().conj().T)
    weights: dict = {}
    for ket, amp in aligned.amplitudes.items():
        counts = (ket[0] + injected_psi, ket[1], ket[2], ket[3])
        if _in_sector(counts, postselection):
            weights[counts] = weights.get(counts, 0.0) + abs(amp) ** 2
    total = sum(weights.values())
    if total == 0:
        return Component(np.zeros((0, 4), dtype=int), np.zeros(0), 0.0)
    configs = np.array(sorted(weights), dtype=int)
    probs = np.array([weights[tuple(c)] for c in configs]) / total
    return Component(configs, probs, total)


def _injected_state(photons: int, qubit: PolarizationQubit, params: AmplifierParams, cutoff: int) -> StateVector:
    if photons == 1:
        return evolve_qubit(qubit, params, cutoff)
    seed = rotate_polarization(StateVector.basis((photons, 0, 0, 0), cutoff), qubit.frame())
    return evolution_oracle(seed, params, cutoff)


def build_components(config: ExperimentConfig) -> dict:
    """Amplified and background sector distributions for one- and two-photon injection."""
    cutoff = 3 if config.postselection == "exact" else THRESHOLD_CUTOFF
    spdc = spdc_output(config.params, cutoff)
    parts = {
        (1, True): _component(_injected_state(1, config.qubit, config.params, cutoff), config.qubit, 0, config.postselection),
        (1, False): _component(spdc, config.qubit, 1, config.postselection),
    }
    if config.double_injection > 0:
        parts[(2, True)] = _component(
            _injected_state(2, config.qubit, config.params, cutoff), config.qubit, 0, config.postselection
        )
        parts[(2, False)] = _component(spdc, config.qubit, 2, config.postselection)
    return parts


def _mixture(config: ExperimentConfig, components: dict):
    """Per-pulse weights of each component restricted to the sector."""
    overlap = injection_overlap(config.z_offset, config.z_sigma)
    single = 1.0 / (1.0 + config.double_injection)
    share = {1: single, 2: 1.0 - single}
    keys = list(components)
    weights = np.array(
        [share[n] * (overlap if amplified else 1.0 - overlap) * components[(n, amplified)].weight for n, amplified in keys]
    )
    return keys, weights


# ----------------------------------------------------------------------------
# Detection


def _routing(detectors: DetectorModel, mode: str):
    """Which photons reach which detector: returns functions of (arm-a counts, arm-b counts, k2 counts)."""
    if mode == "clone":
        return {
            "Da": lambda a, b, k2: a[0],
            "Db": lambda a, b, k2: b[0],
            "Db*": lambda a, b, k2: b[1],
            "D2": lambda a, b, k2: k2[0] + k2[1],
            "DT": lambda a, b, k2: 1,
        }
    return {
        "Da": lambda a, b, k2: a[0] + a[1],
        "Db": lambda a, b, k2: b[0] + b[1],
        "D2": lambda a, b, k2: k2[1],
        "D2*": lambda a, b, k2: k2[0],
        "DT": lambda a, b, k2: 1,
    }


COINCIDENCES = {
    "clone": (("D2", "DT", "Da", "Db"), ("D2", "DT", "Da", "Db*")),
    "unot": (("D2", "DT", "Da", "Db"), ("D2*", "DT", "Da", "Db")),
}


def expected_probabilities(config: ExperimentConfig, detectors: DetectorModel, mode: str, components=None) -> tuple:
    """Exact per-trial probabilities of the signal and noise coincidences, and the sector probability."""
    _check_mode(mode)
    components = components or build_components(config)
    keys, weights = _mixture(config, components)
    sector = float(weights.sum())
    if sector == 0:
        return 0.0, 0.0, 0.0
    t = detectors.beamsplitter_ratio
    route = _routing(detectors, mode)
    signal_set, noise_set = COINCIDENCES[mode]
    p_signal = p_noise = 0.0
    for key, w in zip(keys, weights / sector):
        comp = components[key]
        for config_counts, p in zip(comp.configs, comp.probs):
            n_psi, n_perp, k2psi, k2perp = (int(x) for x in config_counts)
            for a_psi, a_perp in product(range(n_psi + 1), range(n_perp + 1)):
                split = (
                    comb(n_psi, a_psi) * t**a_psi * (1 - t) ** (n_psi - a_psi)
                    * comb(n_perp, a_perp) * t**a_perp * (1 - t) ** (n_perp - a_perp)
                )
                arms = ((a_psi, a_perp), (n_psi - a_psi, n_perp - a_perp), (k2psi, k2perp))
                fire = {d: float(detectors.fire_probability(d, f(*arms))) for d, f in route.items()}
                weight = w * p * split
                p_signal += weight * np.prod([fire[d] for d in signal_set])
                p_noise += weight * np.prod([fire[d] for d in noise_set])
    return p_signal, p_noise, sector


@dataclass
class RunResult:
    mode: str
    report: FidelityReport
    counts_signal: int
    counts_noise: int
    trials: int
    sector_prob: float
    ratio: float
    ratio_err: float
    fidelity: float
    fidelity_err: float
    config: dict = field(default_factory=dict)

    @property
    def rate_signal(self) -> float:
        return self.counts_signal / self.trials * self.sector_prob if self.trials else 0.0

    @property
    def rate_noise(self) -> float:
        return self.counts_noise / self.trials * self.sector_prob if self.trials else 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["report"] = asdict(self.report)
        out["rate_signal"] = self.rate_signal
        out["rate_noise"] = self.rate_noise
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_mode(mode: str):
    if mode not in RUN_MODES:
        raise InvalidArgumentsError(f"mode must be one of {RUN_MODES}, got {mode!r}")


def _sample_counts(config: ExperimentConfig, detectors: DetectorModel, mode: str, components) -> tuple:
    keys, weights = _mixture(config, components)
    sector = float(weights.sum())
    if config.trials == 0 or sector == 0:
        raise InsufficientStatisticsError(
            f"no coincidence-eligible trials (trials={config.trials}, sector probability={sector:.3g})"
        )
    rng = np.random.default_rng(config.seed)
    configs = np.concatenate([components[k].configs for k in keys])
    probs = np.concatenate([w / sector * components[k].probs for k, w in zip(keys, weights)])
    picks = rng.choice(len(configs), size=config.trials, p=probs / probs.sum())
    n_psi, n_perp, k2psi, k2perp = configs[picks].T
    t = detectors.beamsplitter_ratio
    a_psi = rng.binomial(n_psi, t)
    a_perp = rng.binomial(n_perp, t)
    arms = ((a_psi, a_perp), (n_psi - a_psi, n_perp - a_perp), (k2psi, k2perp))
    fired = {
        d: rng.random(config.trials) < detectors.fire_probability(d, np.broadcast_to(f(*arms), (config.trials,)))
        for d, f in _routing(detectors, mode).items()
    }
    signal_set, noise_set = COINCIDENCES[mode]
    signal = int(np.logical_and.reduce([fired[d] for d in signal_set]).sum())
    noise = int(np.logical_and.reduce([fired[d] for d in noise_set]).sum())
    return signal, noise, sector


def _ratio_error(signal: int, noise: int, trials: int, ratio: float) -> float:
    # multinomial counts: relative variances add, covariance contributes +2/trials
    rel2 = (1 - signal / trials) / signal + (1 - noise / trials) / noise + 2 / trials
    return ratio * sqrt(rel2)


def _simulate(config: ExperimentConfig, detectors: DetectorModel, mode: str, components=None) -> RunResult:
    _check_mode(mode)
    components = components or build_components(config)
    signal, noise, sector = _sample_counts(config, detectors, mode, components)
    if noise == 0 or signal == 0:
        raise InsufficientStatisticsError(
            f"{mode} run has signal={signal}, noise={noise}; ratio undefined", signal=signal, noise=noise
        )
    if mode == "clone":
        ratio = signal / (2 * noise)
        err = _ratio_error(signal, noise, config.trials, ratio)
        fid, fid_err = float(fidelity_from_ratio(ratio)), err / (2 * (ratio + 1) ** 2)
        report = FidelityReport(fid, None, ratio, None, 0.0, sector)
    else:
        ratio = signal / noise
        err = _ratio_error(signal, noise, config.trials, ratio)
        fid, fid_err = float(unot_from_ratio(ratio)), err / (ratio + 1) ** 2
        report = FidelityReport(None, fid, None, ratio, 0.0, sector)
    return RunResult(mode, report, signal, noise, config.trials, sector, ratio, err, fid, fid_err, config.to_dict())


def simulate_cloning_run(config: ExperimentConfig, detectors: DetectorModel | None = None, components=None) -> RunResult:
    return _simulate(config, detectors or DetectorModel(), "clone", components)


def simulate_unot_run(config: ExperimentConfig, detectors: DetectorModel | None = None, components=None) -> RunResult:
    return _simulate(config, detectors or DetectorModel(), "unot", components)


@dataclass(frozen=True)
class ScanRow:
    z: float
    counts_signal: int
    counts_noise: int
    ratio: float
    rate_signal: float
    rate_noise: float


def z_scan(config: ExperimentConfig, detectors: DetectorModel | None, z_grid, mode: str = "clone") -> list:
    """One run per mirror offset; point ``i`` uses seed ``config.seed ^ i``."""
    _check_mode(mode)
    grid = [float(z) for z in z_grid]
    if not grid:
        raise InvalidArgumentsError("z grid is empty")
    detectors = detectors or DetectorModel()
    components = build_components(config)
    rows = []
    for i, z in enumerate(grid):
        point = config.with_offset(z, config.seed ^ i)
        signal, noise, sector = _sample_counts(point, detectors, mode, components)
        if noise == 0:
            ratio = float("nan")
        else:
            ratio = signal / (2 * noise) if mode == "clone" else signal / noise
        scale = sector / point.trials
        rows.append(ScanRow(z, signal, noise, ratio, signal * scale, noise * scale))
    return rows


def default_z_grid(z_sigma: float, points: int = 41, span: float = 3.0) -> np.ndarray:
    return np.linspace(-span * z_sigma, span * z_sigma, points)
