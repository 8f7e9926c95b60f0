"""Batch front end: ``mdidecoy {gains,bounds,rate,sweep,optimize}``.

Configuration is a plain-text file of ``key = value`` lines (``#`` starts a
comment) plus repeatable ``--set key=value`` overrides, which win.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, fields
from decimal import Decimal
from pathlib import Path
from typing import Optional

from .decoy import estimate_bounds, read_gain_csv, write_gain_csv
from .keyrate import PROTOCOLS, ProtocolParams, evaluate_rates
from .optics import ChannelParams, DetectorParams, compute_gain_table, source_distributions
from .optimize import SweepConfig, sweep
from .source import BasisIntensities, SourceSet


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    e_0: float = 0.5
    e_d: float = 0.015
    p_d: float = 3.0e-6
    f: float = 1.16
    mu1_z: Optional[float] = 0.1
    mu2_z: Optional[float] = 0.15
    mu1_x: Optional[float] = 0.1
    mu2_x: Optional[float] = 0.15
    nu1_z: Optional[float] = 0.1
    nu2_z: Optional[float] = 0.15
    nu1_x: Optional[float] = 0.1
    nu2_x: Optional[float] = 0.15
    loss_db: float = 20.0
    loss_start: float = 0.0
    loss_stop: float = 40.0
    loss_step: float = 1.0
    protocols: str = ",".join(PROTOCOLS)
    free_decoy: bool = False
    search_min: float = 1e-3
    search_max: float = 1.5
    grid_points: int = 40
    rel_tol: float = 1e-4
    cutoff: Optional[int] = None
    tail_epsilon: float = 1e-12
    gains_csv: Optional[str] = None
    out: Optional[str] = None

    def sources(self) -> SourceSet:
        return SourceSet(
            BasisIntensities(self.mu1_z, self.mu2_z),
            BasisIntensities(self.mu1_x, self.mu2_x),
            BasisIntensities(self.nu1_z, self.nu2_z),
            BasisIntensities(self.nu1_x, self.nu2_x),
        )

    def detector(self) -> DetectorParams:
        return DetectorParams(self.p_d, self.e_d, self.e_0)

    def protocol(self) -> ProtocolParams:
        return ProtocolParams(self.f)

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            loss_start=self.loss_start,
            loss_stop=self.loss_stop,
            loss_step=self.loss_step,
            protocols=tuple(p.strip() for p in self.protocols.split(",") if p.strip()),
            free_decoy=self.free_decoy,
            search_min=self.search_min,
            search_max=self.search_max,
            grid_points=self.grid_points,
            rel_tol=self.rel_tol,
            sources=self.sources(),
            detector=self.detector(),
            protocol_params=self.protocol(),
            tail_epsilon=self.tail_epsilon,
            photon_cutoff=self.cutoff,
        )


_TYPES = {
    "float": float,
    "int": int,
    "bool": bool,
    "str": str,
}


def _convert(key: str, raw: str):
    annotation = {f.name: f.type for f in fields(RunConfig)}[key]
    optional = annotation.startswith("Optional[")
    base = annotation[len("Optional[") : -1] if optional else annotation
    raw = raw.strip()
    if optional and raw.lower() in ("none", ""):
        return None
    try:
        if base == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return _TYPES[base](raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {base}") from None


def parse_assignment(text: str):
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    if key not in {f.name for f in fields(RunConfig)}:
        raise ConfigError(f"unknown config key {key!r}")
    return key, _convert(key, value)


def load_config(path: Optional[str], overrides=()) -> RunConfig:
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                key, value = parse_assignment(line)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            values[key] = value
    for item in overrides:
        key, value = parse_assignment(item)
        values[key] = value
    return RunConfig(**values)


def fmt(x) -> str:
    """12 significant digits in positional notation."""
    if isinstance(x, str):
        return x
    if x is None or math.isnan(x):
        return "nan"
    return format(Decimal(f"{float(x):.11e}"), "f")


def _write_rows(out, header, rows):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


RATE_COLUMNS = ("R_standard", "R_Z", "R_X", "R_infinite")
_RATE_PROTOCOL = dict(zip(RATE_COLUMNS, PROTOCOLS))
SWEEP_HEADER = (
    ("loss_db",)
    + RATE_COLUMNS
    + tuple(c + "_raw" for c in RATE_COLUMNS)
    + ("rel_standard", "rel_Z", "rel_X")
)


def _sweep_values(report):
    return (
        [report.loss_db]
        + [report.clamped(_RATE_PROTOCOL[c]) for c in RATE_COLUMNS]
        + [report.rate(_RATE_PROTOCOL[c]) for c in RATE_COLUMNS]
        + [report.relative(p) for p in PROTOCOLS[:3]]
    )


def cmd_gains(cfg: RunConfig, out, parallel):
    gains = compute_gain_table(
        cfg.sources(), ChannelParams(cfg.loss_db), cfg.detector(), cfg.tail_epsilon, cfg.cutoff
    )
    write_gain_csv(gains, out, fmt=fmt)


def cmd_bounds(cfg: RunConfig, out, parallel):
    sources = cfg.sources()
    if cfg.gains_csv is not None:
        gains = read_gain_csv(cfg.gains_csv)
        loss = ""
    else:
        gains = compute_gain_table(sources, ChannelParams(cfg.loss_db), cfg.detector(), cfg.tail_epsilon, cfg.cutoff)
        loss = cfg.loss_db
    bounds = estimate_bounds(gains, sources, dists=source_distributions(sources, cfg.tail_epsilon, cfg.cutoff))
    d = bounds.as_dict()
    _write_rows(out, ("loss_db",) + tuple(d), [[loss] + list(d.values())])


def cmd_rate(cfg: RunConfig, out, parallel):
    report = evaluate_rates(
        cfg.sources(), ChannelParams(cfg.loss_db), cfg.detector(), cfg.protocol(), cfg.tail_epsilon, cfg.cutoff
    )
    d = report.as_dict()
    extra = tuple(k for k in d if k not in SWEEP_HEADER)
    _write_rows(out, SWEEP_HEADER + extra, [_sweep_values(report) + [d[k] for k in extra]])


def cmd_sweep(cfg: RunConfig, out, parallel):
    rows = sweep(cfg.sweep_config(), optimize=False, parallel=parallel)
    _write_rows(out, SWEEP_HEADER, [_sweep_values(r.report) for r in rows])


def cmd_optimize(cfg: RunConfig, out, parallel):
    rows = sweep(cfg.sweep_config(), optimize=True, parallel=parallel)
    table = []
    for row in rows:
        for protocol, opt in row.optima.items():
            table.append([row.loss_db, protocol, opt.decoy, opt.signal, opt.rate])
    _write_rows(out, ("loss_db", "protocol", "decoy_intensity", "signal_intensity", "rate"), table)


COMMANDS = {
    "gains": cmd_gains,
    "bounds": cmd_bounds,
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdidecoy", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--parallel", type=int, default=None, metavar="N", help="worker processes for sweeps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"mdidecoy: {exc}", file=sys.stderr)
        return 2
    out_path = args.out or cfg.out
    buf = io.StringIO()
    try:
        COMMANDS[args.command](cfg, buf, args.parallel)
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"mdidecoy: {msg}", file=sys.stderr)
        return 1
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
