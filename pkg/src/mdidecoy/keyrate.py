"""Asymptotic key rates per pulse pair for the three finite-decoy estimators and the infinite-decoy limit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .decoy import BoundEstimates, estimate_bounds
from .optics import (
    ChannelParams,
    DetectorParams,
    GainTable,
    YieldTable,
    gains_from_yields,
    source_distributions,
    table_cutoff,
    yield_table,
)
from .source import DEFAULT_TAIL_EPSILON, PhotonNumberDistribution, SourceSet

PROTOCOLS = ("standard", "z_anchored", "x_anchored", "infinite")


@dataclass(frozen=True)
class ProtocolParams:
    error_correction_inefficiency: float = 1.16

    def __post_init__(self):
        if not self.error_correction_inefficiency >= 1:
            raise ValueError(f"error correction inefficiency must be >= 1, got {self.error_correction_inefficiency}")


def binary_entropy(e: float) -> float:
    """H(e) in bits, with H(0) = H(1) = 0."""
    if not 0 <= e <= 1:
        raise ValueError(f"binary entropy needs e in [0, 1], got {e}")
    if e == 0 or e == 1:
        return 0.0
    return -e * math.log2(e) - (1 - e) * math.log2(1 - e)


def _privacy_term(a1_sig: float, b1_sig: float, s11: float, e11: float) -> float:
    # phase-error bounds beyond 1/2 carry no information
    if math.isnan(s11) or math.isnan(e11) or s11 <= 0:
        return 0.0
    return a1_sig * b1_sig * s11 * (1.0 - binary_entropy(min(e11, 0.5)))


def _correction_term(gains: GainTable, protocol: ProtocolParams) -> float:
    s_yy = gains.S("Z", "y", "y")
    return protocol.error_correction_inefficiency * s_yy * binary_entropy(gains.E("Z", "y", "y"))


def key_rate_standard(
    bounds: BoundEstimates,
    gains: GainTable,
    signal_a: PhotonNumberDistribution,
    signal_b: PhotonNumberDistribution,
    protocol: ProtocolParams = ProtocolParams(),
) -> float:
    """Z-basis yield bound with the X-basis error bound from the X-basis yield bound."""
    credit = _privacy_term(signal_a[1], signal_b[1], bounds.s11_lower_Z, bounds.e11_upper_X)
    return credit - _correction_term(gains, protocol)


def key_rate_z_anchored(bounds, gains, signal_a, signal_b, protocol=ProtocolParams()) -> float:
    credit = _privacy_term(signal_a[1], signal_b[1], bounds.s11_lower_Z, bounds.e11_upper_X_via_Z)
    return credit - _correction_term(gains, protocol)


def key_rate_x_anchored(bounds, gains, signal_a, signal_b, protocol=ProtocolParams()) -> float:
    """The X-basis yield bound stands in for the Z-basis yield."""
    credit = _privacy_term(signal_a[1], signal_b[1], bounds.s11_lower_X, bounds.e11_upper_X)
    return credit - _correction_term(gains, protocol)


def key_rate_infinite(
    yields: YieldTable,
    signal_a: PhotonNumberDistribution,
    signal_b: PhotonNumberDistribution,
    gains: GainTable,
    protocol: ProtocolParams = ProtocolParams(),
) -> float:
    """Rate with the true single-photon-pair yield and X-basis error rate."""
    y11_x = yields.Y["X"][1, 1]
    if not y11_x > 0:
        return 0.0
    credit = _privacy_term(signal_a[1], signal_b[1], yields.s11("Z"), yields.e11("X"))
    return credit - _correction_term(gains, protocol)


@dataclass(frozen=True)
class RateReport:
    loss_db: float
    R_standard: float
    R_Z: float
    R_X: float
    R_infinite: float
    s11_lower_Z: float
    s11_lower_X: float
    e11_upper_X: float
    e11_upper_X_via_Z: float
    s11_true: float
    e11_X_true: float
    S_yy_Z: float
    E_yy_Z: float

    def rate(self, protocol: str) -> float:
        return {
            "standard": self.R_standard,
            "z_anchored": self.R_Z,
            "x_anchored": self.R_X,
            "infinite": self.R_infinite,
        }[protocol]

    def clamped(self, protocol: str) -> float:
        """Rate floored at zero; NaN stays NaN."""
        r = self.rate(protocol)
        return r if math.isnan(r) else max(r, 0.0)

    def relative(self, protocol: str) -> float:
        """Clamped rate over the clamped infinite-decoy rate; NaN where the latter is 0."""
        ref = self.clamped("infinite")
        return self.clamped(protocol) / ref if ref > 0 else math.nan

    def as_dict(self):
        return asdict(self)


def evaluate_rates(
    sources: SourceSet,
    channel: ChannelParams,
    det: DetectorParams = DetectorParams(),
    protocol: ProtocolParams = ProtocolParams(),
    tail_epsilon: float = DEFAULT_TAIL_EPSILON,
    photon_cutoff: Optional[int] = None,
) -> RateReport:
    """Simulate one channel-loss point and evaluate every key-rate formula on it.

    Rates stay raw (possibly negative); estimators the source configuration
    cannot support come back as NaN.
    """
    dists = source_distributions(sources, tail_epsilon, photon_cutoff)
    yields = yield_table(channel, det, table_cutoff(dists, photon_cutoff, tail_epsilon))
    gains = gains_from_yields(yields, dists)
    bounds = estimate_bounds(gains, sources, dists=dists)
    sig_a, sig_b = dists[("A", "Z", "y")], dists[("B", "Z", "y")]
    nan = math.nan
    r_std = r_x = nan
    r_z = nan if math.isnan(bounds.s11_lower_Z) else key_rate_z_anchored(bounds, gains, sig_a, sig_b, protocol)
    if not math.isnan(bounds.s11_lower_X):
        r_x = key_rate_x_anchored(bounds, gains, sig_a, sig_b, protocol)
        if not math.isnan(bounds.s11_lower_Z):
            r_std = key_rate_standard(bounds, gains, sig_a, sig_b, protocol)
    return RateReport(
        loss_db=channel.total_loss_db,
        R_standard=r_std,
        R_Z=r_z,
        R_X=r_x,
        R_infinite=key_rate_infinite(yields, sig_a, sig_b, gains, protocol),
        s11_lower_Z=bounds.s11_lower_Z,
        s11_lower_X=bounds.s11_lower_X,
        e11_upper_X=bounds.e11_upper_X,
        e11_upper_X_via_Z=bounds.e11_upper_X_via_Z,
        s11_true=yields.s11("Z"),
        e11_X_true=yields.e11("X"),
        S_yy_Z=gains.S("Z", "y", "y"),
        E_yy_Z=gains.E("Z", "y", "y"),
    )
