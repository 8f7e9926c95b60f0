"""Intensity optimization of each key-rate formula over a channel-loss sweep.

Parties are symmetric (mu_i = nu_i). Free intensities are searched in log space:
a coarse log-spaced grid first, then golden-section refinement one coordinate
at a time around the best grid point.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .keyrate import PROTOCOLS, ProtocolParams, RateReport, evaluate_rates
from .optics import ChannelParams, DetectorParams
from .source import DEFAULT_TAIL_EPSILON, BasisIntensities, SourceSet

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SweepConfig:
    loss_start: float = 0.0
    loss_stop: float = 40.0
    loss_step: float = 1.0
    protocols: Tuple[str, ...] = PROTOCOLS
    free_decoy: bool = False
    search_min: float = 1e-3
    search_max: float = 1.5
    grid_points: int = 40
    rel_tol: float = 1e-4
    rounds: int = 2
    sources: SourceSet = field(default_factory=SourceSet)
    detector: DetectorParams = field(default_factory=DetectorParams)
    protocol_params: ProtocolParams = field(default_factory=ProtocolParams)
    tail_epsilon: float = DEFAULT_TAIL_EPSILON
    photon_cutoff: Optional[int] = None

    def __post_init__(self):
        if not self.loss_step > 0:
            raise ValueError(f"loss_step must be > 0, got {self.loss_step}")
        if not 0 < self.search_min < self.search_max <= 1.5:
            raise ValueError("search bounds must satisfy 0 < search_min < search_max <= 1.5")
        if self.grid_points < 40:
            raise ValueError("the coarse grid needs at least 40 points per free intensity")
        unknown = set(self.protocols) - set(PROTOCOLS)
        if unknown:
            raise ValueError(f"unknown protocol(s) {sorted(unknown)}; choose from {PROTOCOLS}")
        if not 0 < self.rel_tol <= 1e-3:
            raise ValueError("rel_tol must lie in (0, 1e-3]")

    def losses(self) -> List[float]:
        return loss_points(self.loss_start, self.loss_stop, self.loss_step)


def loss_points(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic loss grid; empty when ``stop < start``."""
    if stop < start:
        return []
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


@dataclass(frozen=True)
class OptimumResult:
    loss_db: float
    protocol: str
    decoy: float
    signal: float
    rate: float
    evaluations: int


def sources_for(protocol: str, base: SourceSet, decoy: float, signal: float) -> SourceSet:
    """Symmetric source set for ``protocol`` with the given decoy and signal intensities.

    ``standard`` shares both intensities across bases; ``z_anchored`` drops the
    X-basis signal; ``x_anchored`` keeps the fixed X-basis pair from ``base``
    (decoy replaced) and uses only the Z-basis signal; ``infinite`` needs only
    the Z-basis signal.
    """
    x_fixed = base.alice_x
    if protocol == "standard":
        z = x = BasisIntensities(decoy, signal)
    elif protocol == "z_anchored":
        z, x = BasisIntensities(decoy, signal), BasisIntensities(decoy, None)
    elif protocol == "x_anchored":
        z, x = BasisIntensities(None, signal), BasisIntensities(decoy, x_fixed.signal)
    elif protocol == "infinite":
        z, x = BasisIntensities(None, signal), x_fixed
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return SourceSet(z, x, z, x)


class _Objective:
    def __init__(self, protocol: str, loss_db: float, config: SweepConfig):
        self.protocol = protocol
        self.channel = ChannelParams(loss_db)
        self.config = config
        self.calls = 0

    def __call__(self, decoy: float, signal: float) -> float:
        self.calls += 1
        try:
            sources = sources_for(self.protocol, self.config.sources, decoy, signal)
        except ValueError:
            return -math.inf
        cfg = self.config
        report = evaluate_rates(
            sources, self.channel, cfg.detector, cfg.protocol_params, cfg.tail_epsilon, cfg.photon_cutoff
        )
        rate = report.rate(self.protocol)
        return -math.inf if math.isnan(rate) else rate


def golden_section_max(f, lo: float, hi: float, rel_tol: float) -> Tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi] by golden-section search in log space.

    Stops once hi/lo - 1 < rel_tol. Ties keep the lower sub-interval.
    """
    a, b = math.log(lo), math.log(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while math.expm1(b - a) > rel_tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(math.exp(d))
    x, fx = (c, fc) if fc >= fd else (d, fd)
    return math.exp(x), fx


def _interval(name: str, protocol: str, decoy: float, signal: float, config: SweepConfig):
    lo, hi = config.search_min, config.search_max
    same_basis = protocol in ("standard", "z_anchored")
    if name == "signal":
        if same_basis:
            lo = max(lo, decoy * (1 + 1e-6))
    else:
        upper = signal if same_basis else config.sources.alice_x.signal
        if upper is not None:
            hi = min(hi, upper * (1 - 1e-6))
    return lo, hi


def optimize_point(loss_db: float, config: SweepConfig, protocol: str) -> OptimumResult:
    """Intensities maximizing ``protocol``'s key rate at one loss point.

    Returns rate 0 with NaN intensities when no grid point has a positive rate.
    """
    f = _Objective(protocol, loss_db, config)
    fixed_decoy = config.sources.alice_z.decoy
    if protocol == "x_anchored" or fixed_decoy is None:
        fixed_decoy = config.sources.alice_x.decoy
    free = ["signal"]
    if config.free_decoy and protocol != "infinite":
        free = ["decoy", "signal"]

    point = {"decoy": fixed_decoy, "signal": None}
    n = config.grid_points
    if free == ["signal"]:
        lo, hi = _interval("signal", protocol, fixed_decoy, 0.0, config)
        grid = np.geomspace(lo, hi, n)
        values = [f(fixed_decoy, s) for s in grid]
        best = int(np.argmax(values))
        point["signal"], best_rate = float(grid[best]), values[best]
    else:
        grid = np.geomspace(config.search_min, config.search_max, n)
        best_rate = -math.inf
        for d in grid:
            for s in grid:
                r = f(d, s) if d < s or protocol == "x_anchored" else -math.inf
                if r > best_rate:
                    best_rate, point["decoy"], point["signal"] = r, float(d), float(s)
    if not best_rate > 0:
        return OptimumResult(loss_db, protocol, math.nan, math.nan, 0.0, f.calls)

    step = float(grid[1] / grid[0])
    for _ in range(config.rounds):
        for name in free:
            lo, hi = _interval(name, protocol, point["decoy"], point["signal"], config)
            x0 = point[name]
            lo, hi = max(lo, x0 / step), min(hi, x0 * step)
            if not lo < hi:
                continue

            def along(x, name=name):
                trial = dict(point, **{name: x})
                return f(trial["decoy"], trial["signal"])

            x, r = golden_section_max(along, lo, hi, config.rel_tol)
            if r > best_rate:
                best_rate, point[name] = r, x
    return OptimumResult(loss_db, protocol, point["decoy"], point["signal"], best_rate, f.calls)


@dataclass(frozen=True)
class SweepRow:
    loss_db: float
    report: RateReport
    optima: Dict[str, OptimumResult]


def _sweep_point(args) -> SweepRow:
    loss_db, config, optimize = args
    report = evaluate_rates(
        config.sources,
        ChannelParams(loss_db),
        config.detector,
        config.protocol_params,
        config.tail_epsilon,
        config.photon_cutoff,
    )
    optima = {p: optimize_point(loss_db, config, p) for p in config.protocols} if optimize else {}
    return SweepRow(loss_db, report, optima)


def sweep(config: SweepConfig, optimize: bool = True, parallel: Optional[int] = None) -> List[SweepRow]:
    """One row per loss point, ordered by loss.

    Each row holds the fixed-intensity rate report and, if ``optimize``, the
    optimum for every configured protocol. ``parallel`` > 1 spreads loss points
    over worker processes; the result does not depend on it.
    """
    tasks = [(loss, config, optimize) for loss in config.losses()]
    if parallel and parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]
