"""Single-photon-pair yield lower bounds and error-rate upper bounds from observed gains."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

from .optics import BASES, GainTable, IncompleteDataError, source_distributions
from .source import (
    DEFAULT_TAIL_EPSILON,
    DegenerateSourceError,
    PhotonNumberDistribution,
    SourceSet,
    require_decoy_condition,
)


class DegenerateDecoyError(ValueError):
    """Decoy and signal coefficients give a non-positive bound denominator."""


class UndefinedBoundError(ValueError):
    """The error-rate bound needs a strictly positive yield lower bound."""


@dataclass(frozen=True)
class TildeQuantities:
    """Vacuum-subtracted gains; entries involving absent signal sources are None."""

    basis: str
    S_tilde_xx: float
    T_tilde_xx: float
    S_tilde_xy: Optional[float] = None
    S_tilde_yx: Optional[float] = None
    S_tilde_yy: Optional[float] = None


def tilde_quantities(
    gains: GainTable,
    basis: str,
    dist_a_x: PhotonNumberDistribution,
    dist_a_y: Optional[PhotonNumberDistribution],
    dist_b_x: PhotonNumberDistribution,
    dist_b_y: Optional[PhotonNumberDistribution],
) -> TildeQuantities:
    a0, b0 = dist_a_x[0], dist_b_x[0]

    def tilde(table, alpha, beta, w_a, w_b):
        return (
            table(basis, alpha, beta)
            - w_a * table(basis, "o", beta)
            - w_b * table(basis, alpha, "o")
            + w_a * w_b * table(basis, "o", "o")
        )

    s_xx = tilde(gains.S, "x", "x", a0, b0)
    t_xx = tilde(gains.T, "x", "x", a0, b0)
    if dist_a_y is None or dist_b_y is None:
        return TildeQuantities(basis, s_xx, t_xx)
    a0p, b0p = dist_a_y[0], dist_b_y[0]
    return TildeQuantities(
        basis,
        s_xx,
        t_xx,
        S_tilde_xy=tilde(gains.S, "x", "y", a0, b0p),
        S_tilde_yx=tilde(gains.S, "y", "x", a0p, b0),
        S_tilde_yy=tilde(gains.S, "y", "y", a0p, b0p),
    )


def s11_lower_bound_raw(tq: TildeQuantities, dist_a_x, dist_a_y, dist_b_x, dist_b_y) -> float:
    """Three-intensity lower bound on the single-photon-pair yield, before clamping."""
    if tq.S_tilde_xy is None or tq.S_tilde_yx is None:
        raise IncompleteDataError(f"{tq.basis} basis lacks the signal-source gains needed for the yield bound")
    require_decoy_condition(dist_a_x, dist_a_y, "Alice")
    require_decoy_condition(dist_b_x, dist_b_y, "Bob")
    a1, a2, a1p, a2p = dist_a_x[1], dist_a_x[2], dist_a_y[1], dist_a_y[2]
    b1, b2, b1p, b2p = dist_b_x[1], dist_b_x[2], dist_b_y[1], dist_b_y[2]
    da = a1 * a2p - a1p * a2
    db = b1 * b2p - b1p * b2
    denom = a1 * b1 * da * db
    if not denom > 0:
        raise DegenerateDecoyError(
            "bound denominator a1 b1 (a1 a2' - a1' a2)(b1 b2' - b1' b2) is not positive; "
            "decoy and signal intensities are equal or mis-ordered"
        )
    num = (a1 * a2p * b1 * b2p - a1p * a2 * b1p * b2) * tq.S_tilde_xx - b1 * b2 * da * tq.S_tilde_xy - a1 * a2 * db * tq.S_tilde_yx
    return num / denom


def s11_lower_bound(tq: TildeQuantities, dist_a_x, dist_a_y, dist_b_x, dist_b_y) -> float:
    return max(0.0, s11_lower_bound_raw(tq, dist_a_x, dist_a_y, dist_b_x, dist_b_y))


def e11_upper_bound(t_tilde_xx: float, a1: float, b1: float, s11_lower: float) -> float:
    """Upper bound on the single-photon-pair error rate.

    Feed it the yield bound of the same basis for the plain estimate, or the
    (larger) Z-basis yield bound for the tighter cross-basis estimate.
    """
    if not (a1 > 0 and b1 > 0):
        raise DegenerateSourceError("a1 and b1 must be positive")
    if not s11_lower > 0:
        raise UndefinedBoundError("s11 lower bound is zero; no error-rate bound exists")
    return min(1.0, max(0.0, t_tilde_xx) / (a1 * b1 * s11_lower))


@dataclass(frozen=True)
class BoundEstimates:
    """NaN marks a bound the source configuration cannot provide."""

    s11_lower_Z: float
    s11_lower_X: float
    e11_upper_X: float
    e11_upper_X_via_Z: float
    basis_used: str

    def as_dict(self):
        return {
            "s11_lower_Z": self.s11_lower_Z,
            "s11_lower_X": self.s11_lower_X,
            "e11_upper_X": self.e11_upper_X,
            "e11_upper_X_via_Z": self.e11_upper_X_via_Z,
            "basis_used": self.basis_used,
        }


def _yield_bound(gains, dists, basis) -> float:
    a_x, a_y = dists.get(("A", basis, "x")), dists.get(("A", basis, "y"))
    b_x, b_y = dists.get(("B", basis, "x")), dists.get(("B", basis, "y"))
    if None in (a_x, a_y, b_x, b_y):
        return math.nan
    tq = tilde_quantities(gains, basis, a_x, a_y, b_x, b_y)
    return s11_lower_bound(tq, a_x, a_y, b_x, b_y)


def _error_bound(t_tilde, a1, b1, s11) -> float:
    if math.isnan(s11) or s11 <= 0:
        return math.nan
    return e11_upper_bound(t_tilde, a1, b1, s11)


def estimate_bounds(
    gains: GainTable,
    sources: SourceSet,
    tail_epsilon: float = DEFAULT_TAIL_EPSILON,
    dists=None,
) -> BoundEstimates:
    """Yield bounds in each basis and both X-basis error bounds.

    Undefined error bounds (zero yield bound) come back as NaN; the key-rate
    formulas then grant no single-photon credit.
    """
    if dists is None:
        dists = source_distributions(sources, tail_epsilon)
    s_z = _yield_bound(gains, dists, "Z")
    s_x = _yield_bound(gains, dists, "X")
    a_x, b_x = dists[("A", "X", "x")], dists[("B", "X", "x")]
    t_tilde = tilde_quantities(gains, "X", a_x, None, b_x, None).T_tilde_xx
    e_x = _error_bound(t_tilde, a_x[1], b_x[1], s_x)
    e_xz = _error_bound(t_tilde, a_x[1], b_x[1], s_z)
    if math.isnan(s_x):
        used = "Z"
    elif math.isnan(s_z):
        used = "X"
    else:
        used = "Z" if s_z >= s_x else "X"
    return BoundEstimates(s_z, s_x, e_x, e_xz, used)


GAIN_CSV_COLUMNS = ("basis", "alpha", "beta", "S", "T")


def write_gain_csv(gains: GainTable, fh, fmt=repr) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(GAIN_CSV_COLUMNS)
    for key in gains:
        s, t = gains.entries[key]
        writer.writerow([*key, fmt(s), fmt(t)])


def read_gain_csv(path) -> GainTable:
    """Load measured gains with columns basis, alpha, beta, S, T."""
    entries = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(GAIN_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            basis, alpha, beta = row["basis"].strip(), row["alpha"].strip(), row["beta"].strip()
            if basis not in BASES or alpha not in ("o", "x", "y") or beta not in ("o", "x", "y"):
                raise ValueError(f"{path}:{lineno}: bad source key {basis!r}/{alpha!r}/{beta!r}")
            s, t = float(row["S"]), float(row["T"])
            if not 0 <= t <= s <= 1:
                raise ValueError(f"{path}:{lineno}: need 0 <= T <= S <= 1, got S={s}, T={t}")
            entries[(basis, alpha, beta)] = (s, t)
    return GainTable(entries)
