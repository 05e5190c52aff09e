"""Command-line driver: ``bolzalab <subcommand> [--config PATH] [--seed N] [--out DIR] [--threads N]``.

Every run writes ``manifest.json`` (config, versions, wall time),
``report.json`` (metrics and verdicts) and the subcommand's CSV tables into
``<out>/<subcommand>/``.  Exit codes: 0 pass, 2 invariant failure, 3 config
error, 4 budget error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, experiments, kernels
from .errors import ConfigError, LabError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    """Experiment configuration; ``threads`` changes speed only, never the numbers."""

    seed: int = 0
    n_samples: int = 1_000_000
    lambda_ladder: tuple = (0.4, 0.2, 0.1, 0.05)
    t_max: float = 12.0
    K: int = 8
    basis_size: int = 12
    census_L: float = 8.0
    m: int = 0
    output_dir: str = "runs"
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lambda_ladder", tuple(float(x) for x in self.lambda_ladder))
        for name in ("seed", "n_samples", "K", "basis_size", "m", "threads"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        for name in ("n_samples", "K", "basis_size", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.seed < 0 or self.m < 0:
            raise ConfigError("seed and m must be non-negative")
        lad = self.lambda_ladder
        if len(lad) < 3:
            raise ConfigError("lambda_ladder needs at least three rates")
        if any(not math.isfinite(x) or x <= 0 for x in lad):
            raise ConfigError("lambda_ladder rates must be positive")
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ConfigError(f"lambda_ladder must be strictly decreasing, got {list(lad)}")
        for name in ("t_max", "census_L"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be a positive number")

    def to_dict(self):
        d = asdict(self)
        d["lambda_ladder"] = list(self.lambda_ladder)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)


SUBCOMMANDS = {
    "geometry": experiments.run_geometry,
    "census": experiments.run_census,
    "fiber": experiments.run_fiber,
    "tensors": experiments.run_tensors,
    "xray": experiments.run_xray,
    "injectivity": experiments.run_injectivity,
    "mixing": experiments.run_mixing,
    "pi-check": experiments.run_pi_check,
    "symbol": experiments.run_symbol,
    "pushforward": experiments.run_pushforward,
    "livsic": experiments.run_livsic,
}


def _plain(x):
    """JSON-ready copy of nested metrics (numpy scalars, complex, tuples)."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def write_table(rows, path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _versions():
    return {
        "bolzalab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
    }


def run(subcommand, config):
    """Run one subcommand; returns ``(exit_code, outcome)`` and writes the artifacts."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(config.output_dir) / subcommand
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outcome = SUBCOMMANDS[subcommand](config)
    wall = time.perf_counter() - t0
    report = {"subcommand": subcommand, "passed": outcome.passed, "checks": outcome.checks,
              "metrics": _plain(outcome.metrics)}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, rows in outcome.tables.items():
        write_table(rows, out / f"{name}.csv")
    manifest = {
        "subcommand": subcommand,
        "config": config.to_dict(),
        "versions": _versions(),
        "seed": config.seed,
        "wall_time_s": wall,
        "artifacts": ["report.json"] + [f"{n}.csv" for n in outcome.tables],
        "passed": outcome.passed,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return (EXIT_PASS if outcome.passed else EXIT_FAIL), outcome


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="bolzalab", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", type=Path, help="JSON RunConfig file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=str, help="override the output directory")
    p.add_argument("--threads", type=int, help="worker threads (default: LAB_THREADS or 1)")
    return p


def load_config(args, environ=os.environ):
    d = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        d = RunConfig.from_json(text).to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["output_dir"] = args.out
    threads = args.threads
    if threads is None and environ.get("LAB_THREADS"):
        try:
            threads = int(environ["LAB_THREADS"])
        except ValueError as exc:
            raise ConfigError(f"LAB_THREADS must be an integer, got {environ['LAB_THREADS']!r}") from exc
    if threads is not None:
        d["threads"] = threads
    return RunConfig.from_dict(d)


def _error_payload(exc):
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": getattr(exc, "exit_code", 1)}


def main(argv=None):
    args = None
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args)
        code, outcome = run(args.subcommand, config)
        print(json.dumps({"subcommand": args.subcommand, "passed": outcome.passed, "checks": outcome.checks},
                         sort_keys=True))
        return code
    except Exception as exc:  # every failure becomes an error JSON and a nonzero exit
        payload = _error_payload(exc)
        if not isinstance(exc, LabError):
            payload["exit_code"] = 1
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        if args is not None and args.out is not None:
            try:
                d = Path(args.out) / args.subcommand
                d.mkdir(parents=True, exist_ok=True)
                (d / "error.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            except OSError:
                pass
        return payload["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
