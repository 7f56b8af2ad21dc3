"""Command-line runner: ``hme <experiment> [--config FILE] [--out DIR] [--seed N] [--mode M]``.

Writes ``<experiment>.csv`` and ``<experiment>.summary.json`` into the output
directory.  Exit status is 0 on success, 2 for configuration or parse errors
and 3 when a numerical invariant or the experiment's own check fails.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import HMEError, InvariantError
from .experiments import DEFAULT_MODE, EXPERIMENTS, ExperimentResult, resolve_params, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
SEED_MAX = 2**64 - 1


class ConfigError(HMEError):
    code = "config"


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    params: dict = field(default_factory=dict)
    mode: str | None = None
    out: str = "."

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"field 'experiment': unknown experiment {self.experiment!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= SEED_MAX:
            raise ConfigError(f"field 'seed': must be an integer in [0, 2^64), got {self.seed!r}")
        if not isinstance(self.params, dict):
            raise ConfigError("field 'params': must be an object")
        if self.mode is not None and self.mode not in ("exact", "sampled"):
            raise ConfigError(f"field 'mode': must be 'exact' or 'sampled', got {self.mode!r}")
        for key, val in self.params.items():
            if isinstance(val, list) and not val:
                raise ConfigError(f"field 'params.{key}': range is empty")
        try:
            resolve_params(self.experiment, self.params)
        except HMEError as exc:
            raise ConfigError(f"field 'params': {exc}") from None

    def echo(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "mode": self.mode or DEFAULT_MODE.get(self.experiment, "exact"),
            "params": resolve_params(self.experiment, self.params),
        }


_CONFIG_KEYS = {"experiment", "seed", "params", "mode", "out"}


def load_config(experiment: str, path: str | None, seed: int | None, mode: str | None, out: str | None) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        extra = sorted(set(raw) - _CONFIG_KEYS)
        if extra:
            raise ConfigError(f"{path}: unknown field(s) {', '.join(extra)}")
        if raw.get("experiment", experiment) != experiment:
            raise ConfigError(f"field 'experiment': config names {raw['experiment']!r} but subcommand is {experiment!r}")
    if seed is not None:
        raw["seed"] = seed
    if "seed" not in raw:
        raise ConfigError("field 'seed': required (give it in the config or with --seed)")
    if mode is not None:
        raw["mode"] = mode
    if out is not None:
        raw["out"] = out
    raw["experiment"] = experiment
    return ExperimentConfig(**raw)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.12g}"
    return str(v)


def render_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def run(config: ExperimentConfig) -> int:
    """Run one configured experiment, write its artifacts, return the exit status."""
    echo = config.echo()
    result = run_experiment(config.experiment, config.params, config.seed, echo["mode"])
    text = render_csv(result)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{config.experiment}.csv").write_text(text)
    summary = {
        "config": echo,
        "version": __version__,
        "passed": bool(result.passed),
        "rows": len(result.rows),
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "summary": _jsonable(result.summary),
        **({"extra": _jsonable(result.extra)} if result.extra else {}),
    }
    (out / f"{config.experiment}.summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if result.passed else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hme", description="Run HME experiments and write CSV/JSON artifacts.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default: config 'out' or .)")
        p.add_argument("--seed", type=int, help="RNG seed; overrides the config")
        p.add_argument("--mode", choices=("exact", "sampled"))
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.experiment, args.config, args.seed, args.mode, args.out)
    except HMEError as exc:
        print(f"hme: config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = run(cfg)
    except InvariantError as exc:
        print(f"hme: invariant violated [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except HMEError as exc:
        print(f"hme: config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if status == EXIT_INVARIANT:
        print(f"hme: {cfg.experiment} check failed; see {cfg.experiment}.summary.json", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
