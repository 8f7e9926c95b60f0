"""Photon-number distributions for vacuum, decoy and signal sources.

Every source is phase randomized, so its state is diagonal in the Fock basis
and fully described by the vector ``probs[k]`` of k-photon probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln, pdtrc, xlogy

DEFAULT_TAIL_EPSILON = 1e-12


class DegenerateSourceError(ValueError):
    """A source has no single-photon component, so no decoy analysis is possible."""


class DecoyConditionError(ValueError):
    """Decoy and signal sources do not satisfy the decoy ordering condition."""


@dataclass(frozen=True)
class PhotonNumberDistribution:
    probs: np.ndarray
    intensity: Optional[float] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("every probs[k] must lie in [0, 1]")
        if probs.sum() > 1 + 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r} > 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def cutoff(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, k: int) -> float:
        """Probability of ``k`` photons; zero beyond the cutoff."""
        return float(self.probs[k]) if 0 <= k <= self.cutoff else 0.0

    def padded(self, cutoff: int) -> np.ndarray:
        if cutoff < self.cutoff:
            raise ValueError(f"cannot pad to cutoff {cutoff} < {self.cutoff}")
        out = np.zeros(cutoff + 1)
        out[: self.probs.size] = self.probs
        return out

    def __eq__(self, other):
        if not isinstance(other, PhotonNumberDistribution):
            return NotImplemented
        return self.intensity == other.intensity and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.intensity, self.probs.tobytes()))


def vacuum() -> PhotonNumberDistribution:
    return PhotonNumberDistribution(np.array([1.0]), intensity=0.0)


def poisson_cutoff(mu: float, tail_epsilon: float = DEFAULT_TAIL_EPSILON) -> int:
    """Smallest cutoff whose discarded Poisson tail mass is below ``tail_epsilon``."""
    if mu < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mu}")
    if not 0 < tail_epsilon < 1e-6:
        raise ValueError(f"tail_epsilon must lie in (0, 1e-6), got {tail_epsilon}")
    span = int(mu + 12 * mu**0.5) + 40
    while True:
        ks = np.arange(span)
        below = np.flatnonzero(pdtrc(ks, mu) < tail_epsilon)
        if below.size:
            return int(below[0])
        span *= 2


@lru_cache(maxsize=4096)
def poisson_distribution(
    mu: float,
    tail_epsilon: float = DEFAULT_TAIL_EPSILON,
    cutoff: Optional[int] = None,
) -> PhotonNumberDistribution:
    """Truncated photon-number distribution of a phase-randomized coherent state.

    The cutoff is the minimal one leaving less than ``tail_epsilon`` of
    probability in the discarded tail, unless given explicitly.

    >>> poisson_distribution(0.0).probs
    array([1.])
    """
    minimal = poisson_cutoff(mu, tail_epsilon)
    if cutoff is None:
        cutoff = minimal
    elif cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    k = np.arange(cutoff + 1)
    probs = np.exp(xlogy(k, mu) - mu - gammaln(k + 1))
    return PhotonNumberDistribution(probs, intensity=float(mu))


class DecoyCheck(NamedTuple):
    ok: bool
    violating_k: Optional[int]


def _ratios(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # zero denominators count as +inf, which always satisfies the ordering
    with np.errstate(divide="ignore", invalid="ignore"):
        r = y / x
    r[x == 0] = np.inf
    return r


def check_decoy_condition(
    x_dist: PhotonNumberDistribution, y_dist: PhotonNumberDistribution
) -> DecoyCheck:
    """Check y_k/x_k >= y_2/x_2 >= y_1/x_1 for all k >= 2.

    ``x_dist`` is the decoy source and ``y_dist`` the signal source of one party.
    Returns ``DecoyCheck(True, None)`` or the first photon number ``k`` at which
    the ordering breaks (``k == 2`` when y_2/x_2 < y_1/x_1).
    """
    if x_dist[1] == 0 or y_dist[1] == 0:
        raise DegenerateSourceError("decoy and signal sources need a nonzero single-photon probability")
    cutoff = max(x_dist.cutoff, y_dist.cutoff, 2)
    r = _ratios(x_dist.padded(cutoff), y_dist.padded(cutoff))
    if r[2] < r[1]:
        return DecoyCheck(False, 2)
    for k in range(3, cutoff + 1):
        if r[k] < r[2]:
            return DecoyCheck(False, k)
    return DecoyCheck(True, None)


def require_decoy_condition(x_dist, y_dist, who: str = "") -> None:
    check = check_decoy_condition(x_dist, y_dist)
    if not check.ok:
        label = f" for {who}" if who else ""
        raise DecoyConditionError(
            f"decoy condition y_k/x_k >= y_2/x_2 >= y_1/x_1 violated{label} at k={check.violating_k}"
        )


@dataclass(frozen=True)
class BasisIntensities:
    """Decoy and signal intensities of one party in one basis (vacuum is implicit)."""

    decoy: Optional[float] = None
    signal: Optional[float] = None

    def __post_init__(self):
        for name in ("decoy", "signal"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} intensity must be > 0, got {v}")
        if self.decoy is not None and self.signal is not None and not self.decoy < self.signal:
            raise DecoyConditionError(
                f"decoy condition requires decoy < signal intensity, got {self.decoy} >= {self.signal}"
            )


PARTIES = ("A", "B")
BASES = ("Z", "X")


@dataclass(frozen=True)
class SourceSet:
    """Intensities of the vacuum (o), decoy (x) and signal (y) sources per party and basis.

    The Z basis always carries a signal source; the X basis always carries a
    decoy source. Either may omit its other non-vacuum source, which is what the
    one-basis protocols do.
    """

    alice_z: BasisIntensities = field(default_factory=lambda: BasisIntensities(0.1, 0.15))
    alice_x: BasisIntensities = field(default_factory=lambda: BasisIntensities(0.1, 0.15))
    bob_z: BasisIntensities = field(default_factory=lambda: BasisIntensities(0.1, 0.15))
    bob_x: BasisIntensities = field(default_factory=lambda: BasisIntensities(0.1, 0.15))

    def __post_init__(self):
        for name in ("alice_z", "bob_z"):
            if getattr(self, name).signal is None:
                raise ValueError(f"{name} needs a signal intensity")
        for name in ("alice_x", "bob_x"):
            if getattr(self, name).decoy is None:
                raise ValueError(f"{name} needs a decoy intensity")

    @classmethod
    def symmetric(cls, decoy=0.1, signal=0.15, decoy_x=None, signal_x="same", decoy_z="same"):
        """Equal intensities for both parties.

        By default the X basis reuses the Z-basis values; pass ``signal_x=None``
        for an X basis with only the decoy source, or ``decoy_z=None`` for a Z
        basis with only the signal source.
        """
        decoy_x = decoy if decoy_x is None else decoy_x
        signal_x = signal if signal_x == "same" else signal_x
        decoy_z = decoy if decoy_z == "same" else decoy_z
        z = BasisIntensities(decoy_z, signal)
        x = BasisIntensities(decoy_x, signal_x)
        return cls(z, x, z, x)

    def intensities(self, party: str, basis: str) -> BasisIntensities:
        return getattr(self, {"A": "alice", "B": "bob"}[party] + "_" + basis.lower())

    def distribution(
        self, party: str, basis: str, source: str, tail_epsilon: float = DEFAULT_TAIL_EPSILON
    ) -> Optional[PhotonNumberDistribution]:
        """Distribution of source ``'o'``, ``'x'`` or ``'y'``; None if the basis lacks it."""
        if source == "o":
            return vacuum()
        bi = self.intensities(party, basis)
        mu = {"x": bi.decoy, "y": bi.signal}[source]
        return None if mu is None else poisson_distribution(mu, tail_epsilon)

    def labels(self, party: str, basis: str) -> tuple:
        """Source labels party ``party`` can use in ``basis``, vacuum first."""
        bi = self.intensities(party, basis)
        return ("o",) + (("x",) if bi.decoy is not None else ()) + (("y",) if bi.signal is not None else ())
