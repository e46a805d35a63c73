"""Command-line front end.

    keybound scan  --protocol six-state --e-start 0 --e-end 0.35 --steps 71 --out ideal.csv
    keybound point --protocol four-state --e 0.05 --dark-count 1e-6 --efficiency 0.15
    keybound bsa   --input class.json
    keybound info  --input dist.json

Exit codes: 0 success, 2 invalid arguments or unreadable input,
3 inconsistent statistics, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import corollary2_bound, detector_corrected_statistics, reports_to_csv, reports_to_json, scan
from .bsa import BSA_OPTIONS, EquivalenceClassSpec, max_separable_weight
from .detectors import DetectorSpec
from .errors import InconsistentStatistics, InvalidArgument, KeyboundError, NumericalFailure
from .info import (conditional_mutual_information, distribution_from_json, intrinsic_information,
                   joint_distribution, mutual_information, shannon_entropy)
from .protocols import PROTOCOL_BASES, depolarized_bell_state, protocol_povms, tomography_distribution
from .sdp import SolverOptions

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT, EXIT_NUMERICAL = 0, 2, 3, 4
COMMANDS = ("scan", "point", "bsa", "info")
FORMATS = ("csv", "json")

_CONFIG_KEYS = {"protocol", "e_start", "e_end", "steps", "e", "dark_count", "dark_split", "efficiency",
                "input", "out", "format", "tol", "workers"}


class UsageError(InvalidArgument):
    pass


@dataclass
class RunConfig:
    command: str
    protocol: str | None = None
    e_start: float = 0.0
    e_end: float = 0.5
    steps: int = 100
    e: float | None = None
    detectors: DetectorSpec = field(default_factory=DetectorSpec)
    out: str | None = None
    format: str = "csv"
    input: str | None = None
    tol: float | None = None
    workers: int = 1

    @property
    def solver_options(self) -> SolverOptions:
        if self.tol is None:
            return BSA_OPTIONS
        return SolverOptions(feastol=self.tol, gaptol=self.tol)

    def e_grid(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.e_start])
        return np.linspace(self.e_start, self.e_end, self.steps)


def _number(raw, flag: str, kind=float):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise UsageError(f"{flag}: expected a number, got {raw!r}") from None


def _load_json(path: str, flag: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{flag}: cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag}: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None


def validate_config(raw: dict) -> RunConfig:
    """Merge a JSON config file (if any) with flag values and check ranges.

    ``raw`` maps option names (underscored) to values; ``None`` means unset.
    Flags override the file.
    """
    command = raw.get("command")
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    merged: dict = {}
    if raw.get("config"):
        conf = _load_json(raw["config"], "--config")
        if not isinstance(conf, dict):
            raise UsageError(f"--config: {raw['config']} must contain a JSON object")
        unknown = set(conf) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"--config: unknown keys {sorted(unknown)}")
        merged.update(conf)
    merged.update({k: v for k, v in raw.items() if v is not None and k in _CONFIG_KEYS})

    cfg = RunConfig(command)
    protocol = merged.get("protocol")
    if protocol is not None and protocol not in PROTOCOL_BASES:
        raise UsageError(f"--protocol: unknown protocol {protocol!r}; expected four-state or six-state")
    cfg.protocol = protocol

    for key, flag in (("e_start", "--e-start"), ("e_end", "--e-end"), ("e", "--e")):
        if key in merged:
            val = _number(merged[key], flag)
            if not 0.0 <= val <= 0.5:
                raise UsageError(f"{flag}: {val} outside [0, 0.5]")
            setattr(cfg, key, val)
    if cfg.e_start > cfg.e_end:
        raise UsageError(f"--e-start {cfg.e_start} exceeds --e-end {cfg.e_end}")
    if "steps" in merged:
        steps = merged["steps"]
        if isinstance(steps, float) and steps.is_integer():
            steps = int(steps)
        cfg.steps = _number(steps, "--steps", int)
        if cfg.steps < 1:
            raise UsageError(f"--steps: must be at least 1, got {cfg.steps}")
    if "workers" in merged:
        cfg.workers = max(1, _number(merged["workers"], "--workers", int))

    dark = _number(merged.get("dark_count", 0.0), "--dark-count")
    if not 0.0 <= dark < 1.0:
        raise UsageError(f"--dark-count: {dark} outside [0, 1)")
    eta = _number(merged.get("efficiency", 1.0), "--efficiency")
    if not 0.0 < eta <= 1.0:
        raise UsageError(f"--efficiency: {eta} outside (0, 1]")
    split = merged.get("dark_split")
    try:
        cfg.detectors = DetectorSpec(dark, None if split is None else tuple(split), None if eta == 1.0 else eta)
    except InvalidArgument as exc:
        raise UsageError(f"--dark-count: {exc}") from None

    if "tol" in merged:
        tol = _number(merged["tol"], "--tol")
        if not 0.0 < tol < 1.0:
            raise UsageError(f"--tol: {tol} outside (0, 1)")
        cfg.tol = tol
    fmt = merged.get("format", "csv")
    if fmt not in FORMATS:
        raise UsageError(f"--format: expected csv or json, got {fmt!r}")
    cfg.format = fmt
    cfg.out = merged.get("out")
    cfg.input = merged.get("input")

    if command in ("scan", "point") and cfg.protocol is None:
        raise UsageError(f"{command}: --protocol is required")
    if command == "point" and cfg.e is None:
        raise UsageError("point: --e is required")
    if command == "bsa":
        if cfg.input is not None and cfg.protocol is not None:
            raise UsageError("bsa: --input and --protocol are mutually exclusive")
        if cfg.input is None and (cfg.protocol is None or cfg.e is None):
            raise UsageError("bsa: give either --input PATH or both --protocol and --e")
    if command == "info" and cfg.input is None:
        raise UsageError("info: --input is required")
    return cfg


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    if not directory.is_dir():
        raise UsageError(f"--out: directory {directory} does not exist")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        stdout.write(text)


def _run_scan(cfg: RunConfig, stdout) -> int:
    reports = scan(cfg.protocol, cfg.e_grid(), cfg.detectors, cfg.solver_options, workers=cfg.workers)
    text = reports_to_csv(reports) if cfg.format == "csv" else reports_to_json(reports)
    _emit(cfg, text, stdout)
    failed = [r for r in reports if r.error]
    for r in failed:
        print(f"warning: e={r.e:.9g}: {r.error}", file=sys.stderr)
    return EXIT_OK


def _run_point(cfg: RunConfig, stdout) -> int:
    report = corollary2_bound(cfg.protocol, cfg.e, cfg.detectors, cfg.solver_options)
    text = reports_to_csv([report]) if cfg.format == "csv" else reports_to_json([report])
    _emit(cfg, text, stdout)
    return EXIT_OK


def _bsa_spec(cfg: RunConfig) -> EquivalenceClassSpec:
    if cfg.input is not None:
        obj = _load_json(cfg.input, "--input")
        if not isinstance(obj, dict):
            raise UsageError(f"--input: {cfg.input} must contain a JSON object")
        try:
            return EquivalenceClassSpec.from_json(obj)
        except InvalidArgument as exc:
            raise UsageError(f"--input: {cfg.input}: {exc}") from None
    spec = protocol_povms(cfg.protocol)
    observed, bob = tomography_distribution(depolarized_bell_state(cfg.e), spec, cfg.detectors)
    ideal = detector_corrected_statistics(observed, bob.labels, cfg.detectors)
    return EquivalenceClassSpec(spec.tomography_povm, spec.tomography_povm, ideal)


def _run_bsa(cfg: RunConfig, stdout) -> int:
    result = max_separable_weight(_bsa_spec(cfg), cfg.solver_options)
    if result.separable_compatible:
        verdict = "separable-compatible; bound = 0"
    else:
        verdict = "entangled-verified"
    print(f"lambda_max = {result.lambda_max:.9g}", file=stdout)
    print(f"verdict: {verdict}", file=stdout)
    if cfg.out:
        write_atomic(cfg.out, json.dumps(result.to_json(), indent=2) + "\n")
    return EXIT_OK


def _run_info(cfg: RunConfig, stdout) -> int:
    obj = _load_json(cfg.input, "--input")
    try:
        p = joint_distribution(distribution_from_json(obj) if isinstance(obj, dict) else obj)
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise UsageError(f"--input: {cfg.input}: {exc}") from None
    out: dict = {"shape": list(p.shape)}
    if p.ndim == 2:
        out["H(A)"] = shannon_entropy(p.sum(1))
        out["H(B)"] = shannon_entropy(p.sum(0))
        out["I(A;B)"] = mutual_information(p)
    elif p.ndim == 3:
        pab = p.sum(2)
        out["H(A)"] = shannon_entropy(pab.sum(1))
        out["H(B)"] = shannon_entropy(pab.sum(0))
        out["I(A;B)"] = mutual_information(pab)
        out["I(A;B|E)"] = conditional_mutual_information(p)
        res = intrinsic_information(p)
        out["I(A;B|E) intrinsic"] = res.value
        out["channel"] = res.channel.tolist()
    else:
        raise UsageError(f"--input: {cfg.input}: expected a 2- or 3-party distribution, got {p.ndim} axes")
    _emit(cfg, json.dumps(out, indent=2) + "\n", stdout)
    return EXIT_OK


_HANDLERS = {"scan": _run_scan, "point": _run_point, "bsa": _run_bsa, "info": _run_info}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keybound", description="Upper bounds on QKD secret key rates.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    helps = {
        "scan": "bound over a grid of channel error rates",
        "point": "bound at a single error rate",
        "bsa": "maximum separable weight for protocol or custom data",
        "info": "information measures of a JSON distribution",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--protocol", choices=sorted(PROTOCOL_BASES), help="measurement protocol")
        p.add_argument("--e-start", dest="e_start", metavar="E", help="first error rate of a scan (default 0)")
        p.add_argument("--e-end", dest="e_end", metavar="E", help="last error rate of a scan (default 0.5)")
        p.add_argument("--steps", metavar="N", help="number of scan points (default 100)")
        p.add_argument("--e", metavar="E", help="channel error rate in [0, 0.5]")
        p.add_argument("--dark-count", dest="dark_count", metavar="D",
                       help="total dark-count probability, split equally over click outcomes")
        p.add_argument("--efficiency", metavar="ETA", help="detector efficiency in (0, 1]")
        p.add_argument("--input", metavar="PATH", help="JSON equivalence class (bsa) or distribution (info)")
        p.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
        p.add_argument("--format", choices=FORMATS, help="output format (default csv)")
        p.add_argument("--config", metavar="PATH", help="JSON file of option defaults; flags override it")
        p.add_argument("--tol", metavar="TOL", help="solver feasibility and gap tolerance")
        p.add_argument("--workers", metavar="N", help="threads for scans (output is order-stable)")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        cfg = validate_config(vars(args))
        return _HANDLERS[cfg.command](cfg, stdout)
    except InconsistentStatistics as exc:
        print(f"error: inconsistent statistics: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except NumericalFailure as exc:
        extra = "" if exc.best_bound is None else f" (best bound {exc.best_bound:.9g})"
        print(f"error: numerical failure: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
