"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 domain error, 4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .channels import optimal_cloning_fidelity, postselected_report
from .detection import (
    DetectorModel,
    ExperimentConfig,
    default_z_grid,
    simulate_cloning_run,
    simulate_unot_run,
    z_scan,
)
from .dynamics import PRESETS, AmplifierParams, PolarizationQubit, evolve_qubit, nm_clone_state
from .errors import QiopaError, ResourceLimitError
from .universality import bloch_fidelity_scan, fidelity_spread
from .wigner import COORDINATES, ScanPlane, negativity_scan, write_scan_csv

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_RESOURCE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def parse_qubit(text: str) -> PolarizationQubit:
    name = text.strip()
    if name.upper() in PRESETS:
        return PRESETS[name.upper()]
    try:
        a_re, a_im, b_re, b_im = (float(x) for x in name.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"qubit must be one of {sorted(PRESETS)} or 'a_re,a_im,b_re,b_im', got {text!r}")
    norm = a_re**2 + a_im**2 + b_re**2 + b_im**2
    if abs(norm - 1) > 1e-6:
        raise argparse.ArgumentTypeError(f"qubit {text!r} is not normalized (norm^2 = {norm:.6g})")
    return PolarizationQubit.normalized(complex(a_re, a_im), complex(b_re, b_im))


def parse_complex(text: str) -> complex:
    try:
        re_part, im_part = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    return complex(re_part, im_part)


def manifest(command: str, args: argparse.Namespace, **extra) -> dict:
    params = {}
    for key, value in vars(args).items():
        if key in ("func", "command"):
            continue
        if isinstance(value, PolarizationQubit):
            value = _qubit_label(value)
        elif isinstance(value, complex):
            value = [value.real, value.imag]
        elif isinstance(value, list):
            value = [[v[0], [v[1].real, v[1].imag]] if isinstance(v, tuple) else v for v in value]
        params[key] = value
    return {"command": command, "version": __version__, "parameters": params, **extra}


def _qubit_label(q: PolarizationQubit) -> list:
    return [q.alpha.real, q.alpha.imag, q.beta.real, q.beta.imag]


def _emit(path, text: str):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(man: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest: {json.dumps(man, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# Commands


def cmd_evolve(args) -> int:
    params = AmplifierParams(args.gain, args.phi)
    state = evolve_qubit(args.qubit, params, args.cutoff)
    payload = json.loads(state.to_json())
    payload["manifest"] = manifest("evolve", args)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"leakage {state.leakage:.3e} norm {state.norm2():.12g}")
    else:
        sys.stdout.write(text)
        print(f"leakage {state.leakage:.3e} norm {state.norm2():.12g}", file=sys.stderr)
    return EXIT_OK


def cmd_fidelity(args) -> int:
    params = AmplifierParams(args.gain, args.phi)
    if args.scan is None:
        report = postselected_report(evolve_qubit(args.qubit, params, cutoff=3), args.qubit)
        out = json.loads(report.to_json())
        out["manifest"] = manifest("fidelity", args)
        _emit(args.out, json.dumps(out, indent=2) + "\n")
        return EXIT_OK
    if args.seed is None:
        raise UsageError("--scan requires an explicit --seed")
    if args.scan < 0:
        raise UsageError("--scan needs a non-negative sample count")
    rows = bloch_fidelity_scan(params, args.scan, args.seed)
    table = [[*_qubit_label(r.qubit), "empty" if r.empty else r.F, "empty" if r.empty else r.F_star] for r in rows]
    header = ["qubit_alpha_re", "qubit_alpha_im", "qubit_beta_re", "qubit_beta_im", "F", "F_star"]
    _emit(args.out, _csv_text(manifest("fidelity", args), header, table))
    if args.out:
        print(f"rows {len(rows)} F_spread {fidelity_spread(rows):.3e}")
    return EXIT_OK


def cmd_wigner(args) -> int:
    params = AmplifierParams(args.gain, args.phi)
    first, second = args.plane
    lo, hi = args.range
    pinned = dict(args.pin or [])
    plane = ScanPlane(first, second, lo, hi, args.step, pinned)
    result = negativity_scan(plane, params)
    buf = io.StringIO()
    write_scan_csv(result, buf, f"manifest: {json.dumps(manifest('wigner', args), sort_keys=True)}")
    _emit(args.out, buf.getvalue())
    summary = f"min_W {result.min_W:.12g} negative_fraction {result.negative_fraction:.12g}"
    print(summary, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def load_experiment(path: str, seed: int | None):
    source = Path(path)
    if not source.is_file():
        raise UsageError(f"config file not found: {source}")
    try:
        raw = json.loads(source.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {source} is not valid JSON: {exc}")
    if seed is None:
        seed = raw.get("seed")
    if seed is None:
        raise UsageError("a seed is required (config key 'seed' or --seed)")
    qubit = raw.get("qubit", "H")
    qubit = parse_qubit(qubit if isinstance(qubit, str) else ",".join(str(x) for x in qubit))
    config = ExperimentConfig(
        qubit=qubit,
        params=AmplifierParams(raw.get("gain", 0.11), raw.get("phi", 0.0)),
        trials=int(raw.get("trials", 10**6)),
        seed=int(seed),
        z_offset=float(raw.get("z_offset", 0.0)),
        z_sigma=float(raw.get("z_sigma", 1.0)),
        double_injection=float(raw.get("double_injection", 0.0)),
        postselection=raw.get("postselection", "exact"),
    )
    det = raw.get("detectors", {})
    detectors = DetectorModel(det.get("qe", 1.0), det.get("dark_prob", 0.0), det.get("beamsplitter_ratio", 0.5))
    grid = raw.get("z_grid", {})
    return config, detectors, grid, raw


def cmd_experiment(args) -> int:
    try:
        config, detectors, grid, raw = load_experiment(args.config, args.seed)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc))
    man = manifest("experiment", args, config=raw, resolved_seed=config.seed)
    if args.mode == "zscan":
        z = default_z_grid(config.z_sigma, int(grid.get("points", 41)), float(grid.get("span", 3.0)))
        rows = z_scan(config, detectors, z, grid.get("mode", "clone"))
        header = ["z", "counts_signal", "counts_noise", "ratio", "rate_signal", "rate_noise"]
        table = [[r.z, r.counts_signal, r.counts_noise, r.ratio, r.rate_signal, r.rate_noise] for r in rows]
        _emit(args.out, _csv_text(man, header, table))
        return EXIT_OK
    run = simulate_cloning_run(config, detectors) if args.mode == "clone" else simulate_unot_run(config, detectors)
    out = run.to_dict()
    out["manifest"] = man
    _emit(args.out, json.dumps(out, indent=2) + "\n")
    label = "R" if args.mode == "clone" else "R_star"
    fid = "F" if args.mode == "clone" else "F_star"
    line = f"{label} {run.ratio:.6f} +- {run.ratio_err:.6f}  {fid} {run.fidelity:.6f} +- {run.fidelity_err:.6f}"
    print(line, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_nm_state(args) -> int:
    fidelity = optimal_cloning_fidelity(args.n, args.m)
    state = nm_clone_state(args.n, args.m)
    if args.out:
        payload = json.loads(state.to_json())
        payload["manifest"] = manifest("nm-state", args)
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"F = {fidelity}")
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiopa", description="Quantum-injected parametric amplifier simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def physics(p, qubit=True):
        p.add_argument("--gain", type=float, default=0.11)
        p.add_argument("--phi", type=float, default=0.0)
        if qubit:
            p.add_argument("--qubit", type=parse_qubit, default=PRESETS["H"])
        p.add_argument("--out", default=None)

    p = sub.add_parser("evolve", help="evolve a single-photon qubit")
    physics(p)
    p.add_argument("--cutoff", type=int, default=12)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("fidelity", help="postselected fidelities or a Bloch-sphere scan")
    physics(p)
    p.add_argument("--scan", type=int, default=None, help="number of Haar samples added to the three presets")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("wigner", help="closed-form Wigner scan over a coordinate plane")
    physics(p, qubit=False)
    p.add_argument("--plane", nargs=2, choices=COORDINATES, default=["alpha1", "beta1"])
    p.add_argument("--range", nargs=2, type=float, default=[-1.0, 1.0], metavar=("LO", "HI"))
    p.add_argument("--step", type=float, default=0.25)
    p.add_argument("--pin", nargs=2, action="append", metavar=("COORD", "RE,IM"), help="pin a coordinate, e.g. --pin alpha2 0.1,0")
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("experiment", help="Monte-Carlo coincidence experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--mode", choices=("clone", "unot", "zscan"), default="clone")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("nm-state", help="optimal N -> M cloner state and fidelity")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_nm_state)
    return parser


def _normalize_pins(args):
    if getattr(args, "pin", None):
        pins = []
        for name, value in args.pin:
            if name not in COORDINATES:
                raise UsageError(f"unknown coordinate {name!r}")
            try:
                pins.append((name, parse_complex(value)))
            except argparse.ArgumentTypeError as exc:
                raise UsageError(str(exc))
        args.pin = pins


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _normalize_pins(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except QiopaError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
