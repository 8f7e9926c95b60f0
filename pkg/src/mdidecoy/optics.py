"""Photon-number-resolved model of the two channels and the relay's Bell-state measurement.

Output modes are indexed 0..3 as (1H, 1V, 2H, 2V): two spatial outputs of the
balanced beam splitter, each split into horizontal and vertical polarization
and watched by a threshold detector. A set of clicking detectors is encoded as
a 4-bit mask, bit ``i`` for mode ``i``.

Two routes give the probability that a given set of modes is occupied:

* :func:`occupation_distribution` expands the creation-operator product
  term by term (exact, cost grows quickly with photon number);
* :func:`support_probabilities` uses the permanent of the Gram matrix of the
  mode-restricted single-photon states and inclusion-exclusion over subsets
  (closed form, used for the yield tables).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import comb

from .source import (
    DEFAULT_TAIL_EPSILON,
    PARTIES,
    PhotonNumberDistribution,
    SourceSet,
    poisson_cutoff,
    poisson_distribution,
    vacuum,
)

BASES = ("Z", "X")
# largest intensity the default tables are sized for
MAX_INTENSITY = 1.5

PSI_MINUS_PATTERNS = (0b1001, 0b0110)  # {1H, 2V}, {1V, 2H}
PSI_PLUS_PATTERNS = (0b0011, 0b1100)  # {1H, 1V}, {2H, 2V}
_POPCOUNT = np.array([bin(m).count("1") for m in range(16)])


class IncompleteDataError(KeyError):
    """A gain-table entry needed by a computation is missing."""


@dataclass(frozen=True)
class ChannelParams:
    """Total loss over both arms, detector efficiency folded in."""

    total_loss_db: float

    def __post_init__(self):
        if not self.total_loss_db >= 0:
            raise ValueError(f"total_loss_db must be >= 0, got {self.total_loss_db}")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.total_loss_db / 10.0)

    @property
    def xi_eff(self) -> float:
        """Per-arm transmittance; the relay sits midway so both arms share the loss."""
        return 10.0 ** (-self.total_loss_db / 20.0)


@dataclass(frozen=True)
class DetectorParams:
    dark_count_rate: float = 3.0e-6
    misalignment: float = 0.015
    background_error: float = 0.5

    def __post_init__(self):
        if not 0 <= self.dark_count_rate <= 1e-2:
            raise ValueError(f"dark_count_rate must lie in [0, 1e-2], got {self.dark_count_rate}")
        if not 0 <= self.misalignment <= 0.5:
            raise ValueError(f"misalignment must lie in [0, 0.5], got {self.misalignment}")
        if self.background_error != 0.5:
            raise ValueError("background_error is fixed at 0.5 by the symmetric dark-count model")

    @property
    def misalignment_angle(self) -> float:
        """Rotation of Bob's polarization, sin^2(angle) = misalignment."""
        return math.asin(math.sqrt(self.misalignment))


@dataclass(frozen=True)
class PolarizationPrep:
    basis: str
    bit: int

    def __post_init__(self):
        if self.basis not in BASES or self.bit not in (0, 1):
            raise ValueError(f"invalid preparation {self.basis}/{self.bit}")

    @property
    def angle(self) -> float:
        if self.basis == "Z":
            return 0.0 if self.bit == 0 else math.pi / 2
        return math.pi / 4 if self.bit == 0 else -math.pi / 4


def preparations(basis: str):
    """The four equiprobable (Alice, Bob) preparations of ``basis``."""
    return [(PolarizationPrep(basis, i), PolarizationPrep(basis, j)) for i in (0, 1) for j in (0, 1)]


def apply_loss(dist: PhotonNumberDistribution, xi: float) -> PhotonNumberDistribution:
    """Photon-number distribution after a channel of transmittance ``xi``."""
    if not 0 <= xi <= 1:
        raise ValueError(f"transmittance must lie in [0, 1], got {xi}")
    probs = loss_matrix(dist.cutoff, xi).T @ dist.probs
    return PhotonNumberDistribution(np.clip(probs, 0.0, 1.0), intensity=None)


def loss_matrix(cutoff: int, xi: float) -> np.ndarray:
    """``B[n, k]``: probability that k of n photons survive."""
    n = np.arange(cutoff + 1)[:, None]
    k = np.arange(cutoff + 1)[None, :]
    with np.errstate(invalid="ignore"):
        b = comb(n, k) * np.power(xi, k) * np.power(1.0 - xi, np.maximum(n - k, 0))
    return np.where(k <= n, b, 0.0)


def _mode_vectors(theta_a: float, theta_b: float) -> Tuple[np.ndarray, np.ndarray]:
    # beam splitter a -> (c + d)/sqrt2, b -> (c - d)/sqrt2 in each polarization
    ca, sa = math.cos(theta_a), math.sin(theta_a)
    cb, sb = math.cos(theta_b), math.sin(theta_b)
    r = 1.0 / math.sqrt(2.0)
    u = np.array([ca, sa, ca, sa]) * r
    v = np.array([cb, sb, -cb, -sb]) * r
    return u, v


def _compositions(n: int, parts: int = 4):
    if parts == 1:
        yield (n,)
        return
    for i in range(n + 1):
        for rest in _compositions(n - i, parts - 1):
            yield (i,) + rest


def _power_expansion(w: np.ndarray, n: int):
    """Monomial exponents and coefficients of (sum_i w_i x_i)^n."""
    idx = np.array(list(_compositions(n)), dtype=int).reshape(-1, 4)
    fact = np.array([math.factorial(i) for i in range(n + 1)], dtype=float)
    coef = math.factorial(n) / np.prod(fact[idx], axis=1) * np.prod(w[None, :] ** idx, axis=1)
    return idx, coef


def occupation_distribution(
    k: int, theta_a: float, l: int, theta_b: float
) -> Dict[Tuple[int, int, int, int], float]:
    """Exact output Fock-state probabilities of the beam splitter.

    Input: ``k`` photons polarized at ``theta_a`` in Alice's arm and ``l``
    photons at ``theta_b`` in Bob's arm. Keys are occupations of
    (1H, 1V, 2H, 2V).
    """
    u, v = _mode_vectors(theta_a, theta_b)
    ia, ca = _power_expansion(u, k)
    ib, cb = _power_expansion(v, l)
    n_tot = k + l
    occ = (ia[:, None, :] + ib[None, :, :]).reshape(-1, 4)
    flat = np.ravel_multi_index(occ.T, (n_tot + 1,) * 4)
    coef = np.zeros((n_tot + 1) ** 4)
    np.add.at(coef, flat, (ca[:, None] * cb[None, :]).ravel())
    nz = np.flatnonzero(coef)
    occupations = np.array(np.unravel_index(nz, (n_tot + 1,) * 4)).T
    fact = np.array([math.factorial(i) for i in range(n_tot + 1)], dtype=float)
    norm = math.factorial(k) * math.factorial(l)
    probs = coef[nz] ** 2 * np.prod(fact[occupations], axis=1) / norm
    return {tuple(int(x) for x in o): float(p) for o, p in zip(occupations, probs) if p > 0}


def dark_click_matrix(p_d: float) -> np.ndarray:
    """``G[a, O]``: probability of announcement a (0 = psi-, 1 = psi+) given occupied-mode mask O."""
    g = np.zeros((2, 16))
    for a, patterns in enumerate((PSI_MINUS_PATTERNS, PSI_PLUS_PATTERNS)):
        for occupied in range(16):
            for c in patterns:
                if occupied & ~c:
                    continue
                extra = _POPCOUNT[c] - _POPCOUNT[occupied]
                g[a, occupied] += p_d**extra * (1.0 - p_d) ** (4 - _POPCOUNT[c])
    return g


class BsmOutcome(NamedTuple):
    psi_minus: float
    psi_plus: float
    fail: float


def bsm_outcome_distribution(
    k: int, pol_a: float, l: int, pol_b: float, det: DetectorParams
) -> BsmOutcome:
    """Relay announcement probabilities for ``k`` and ``l`` photons at polarization angles ``pol_a``/``pol_b``.

    Bob's polarization is additionally rotated by the misalignment angle.
    """
    occ = occupation_distribution(k, pol_a, l, pol_b + det.misalignment_angle)
    by_mask = np.zeros(16)
    for o, p in occ.items():
        mask = sum(1 << i for i in range(4) if o[i] > 0)
        by_mask[mask] += p
    minus, plus = dark_click_matrix(det.dark_count_rate) @ by_mask
    return BsmOutcome(minus, plus, 1.0 - minus - plus)


def support_probabilities(cutoff: int, theta_a: float, theta_b: float) -> np.ndarray:
    """``P[O, k, l]``: probability that exactly the modes in mask O are occupied.

    Closed form: the probability that all photons stay inside a mode subset M is
    sum_j C(k,j) C(l,j) |u_M|^2(k-j) |v_M|^2(l-j) |<u_M,v_M>|^2j, the permanent
    formula for two bosonic modes; exact supports follow by inclusion-exclusion.
    """
    u, v = _mode_vectors(theta_a, theta_b)
    n = np.arange(cutoff + 1)
    j = n[:, None, None]
    kk = n[None, :, None]
    ll = n[None, None, :]
    valid = (j <= kk) & (j <= ll)
    weights = np.where(valid, comb(kk, j) * comb(ll, j), 0.0)
    within = np.empty((16, cutoff + 1, cutoff + 1))
    for m in range(16):
        sel = np.array([(m >> i) & 1 for i in range(4)], dtype=bool)
        nu = float(np.sum(u[sel] ** 2))
        nv = float(np.sum(v[sel] ** 2))
        w = float(np.sum(u[sel] * v[sel])) ** 2
        terms = weights * np.where(
            valid,
            np.power(nu, np.maximum(kk - j, 0)) * np.power(nv, np.maximum(ll - j, 0)) * np.power(w, j),
            0.0,
        )
        within[m] = terms.sum(axis=0)
    exact = np.zeros_like(within)
    for o in range(16):
        sub = o
        while True:
            sign = -1.0 if (_POPCOUNT[o] - _POPCOUNT[sub]) % 2 else 1.0
            exact[o] += sign * within[sub]
            if sub == 0:
                break
            sub = (sub - 1) & o
    # cancellation leaves ~1e-17 negatives where the exact value is zero
    return np.maximum(exact, 0.0)


@lru_cache(maxsize=64)
def _announcement_tables(cutoff: int, det: DetectorParams):
    """Per-basis success and wrong-bit probabilities for (k, l) photons reaching the relay."""
    g = dark_click_matrix(det.dark_count_rate)
    out = {}
    for basis in BASES:
        succ = np.zeros((cutoff + 1, cutoff + 1))
        err = np.zeros_like(succ)
        for prep_a, prep_b in preparations(basis):
            sp = support_probabilities(cutoff, prep_a.angle, prep_b.angle + det.misalignment_angle)
            minus, plus = np.tensordot(g, sp, axes=(1, 0))
            succ += minus + plus
            if basis == "Z":
                if prep_a.bit == prep_b.bit:
                    err += minus + plus
            else:
                err += plus if prep_a.bit != prep_b.bit else minus
        out[basis] = (succ / 4.0, err / 4.0)
    return out


@dataclass(frozen=True)
class YieldTable:
    """``Y[basis][n, m]`` success and ``T[basis][n, m]`` wrong-bit probability for n, m emitted photons."""

    cutoff: int
    Y: Dict[str, np.ndarray]
    T: Dict[str, np.ndarray]

    def s11(self, basis: str = "Z") -> float:
        return float(self.Y[basis][1, 1])

    def e11(self, basis: str = "X") -> float:
        y = self.Y[basis][1, 1]
        return float(self.T[basis][1, 1] / y) if y > 0 else 0.0


def default_cutoff(tail_epsilon: float = DEFAULT_TAIL_EPSILON) -> int:
    return poisson_cutoff(MAX_INTENSITY, tail_epsilon)


@lru_cache(maxsize=512)
def yield_table(channel: ChannelParams, det: DetectorParams, cutoff: int) -> YieldTable:
    """Yields after loss on both arms; cached per configuration."""
    b = loss_matrix(cutoff, channel.xi_eff)
    ys, ts = {}, {}
    for basis, (succ, err) in _announcement_tables(cutoff, det).items():
        y = b @ succ @ b.T
        t = b @ err @ b.T
        y.setflags(write=False)
        t.setflags(write=False)
        ys[basis], ts[basis] = y, t
    return YieldTable(cutoff, ys, ts)


def yields_for_pair(n: int, m: int, basis: str, channel: ChannelParams, det: DetectorParams) -> Tuple[float, float]:
    """(Y, T_y) for ``n`` photons from Alice and ``m`` from Bob in ``basis``."""
    table = yield_table(channel, det, max(n, m, 1))
    return float(table.Y[basis][n, m]), float(table.T[basis][n, m])


class GainTable:
    """Observed gains S and wrong-bit probabilities T keyed by (basis, alpha, beta)."""

    def __init__(self, entries: Optional[Dict[Tuple[str, str, str], Tuple[float, float]]] = None):
        self.entries = dict(entries or {})

    def _get(self, basis, alpha, beta):
        try:
            return self.entries[(basis, alpha, beta)]
        except KeyError:
            raise IncompleteDataError(f"no gain entry for basis={basis} sources={alpha}{beta}") from None

    def S(self, basis: str, alpha: str, beta: str) -> float:
        return self._get(basis, alpha, beta)[0]

    def T(self, basis: str, alpha: str, beta: str) -> float:
        return self._get(basis, alpha, beta)[1]

    def E(self, basis: str, alpha: str, beta: str) -> float:
        s, t = self._get(basis, alpha, beta)
        return t / s if s > 0 else 0.0

    def __contains__(self, key):
        return key in self.entries

    def __iter__(self):
        return iter(sorted(self.entries, key=_entry_order))

    def __len__(self):
        return len(self.entries)


def _entry_order(key):
    basis, alpha, beta = key
    return (BASES.index(basis), "oxy".index(alpha), "oxy".index(beta))


def source_distributions(
    sources: SourceSet, tail_epsilon: float = DEFAULT_TAIL_EPSILON, photon_cutoff: Optional[int] = None
) -> Dict[Tuple[str, str, str], PhotonNumberDistribution]:
    """All distributions keyed by (party, basis, source label)."""
    out = {}
    for party in PARTIES:
        for basis in BASES:
            for label in sources.labels(party, basis):
                if label == "o":
                    out[(party, basis, label)] = vacuum()
                    continue
                bi = sources.intensities(party, basis)
                mu = bi.decoy if label == "x" else bi.signal
                out[(party, basis, label)] = poisson_distribution(mu, tail_epsilon, cutoff=photon_cutoff)
    return out


def gains_from_yields(
    table: YieldTable, dists: Dict[Tuple[str, str, str], PhotonNumberDistribution]
) -> GainTable:
    entries = {}
    for basis in BASES:
        alphas = [key[2] for key in dists if key[0] == "A" and key[1] == basis]
        betas = [key[2] for key in dists if key[0] == "B" and key[1] == basis]
        for alpha, beta in product(alphas, betas):
            pa = dists[("A", basis, alpha)].probs
            pb = dists[("B", basis, beta)].probs
            if max(pa.size, pb.size) > table.cutoff + 1:
                raise ValueError("yield table cutoff is smaller than a source cutoff")
            y = table.Y[basis][: pa.size, : pb.size]
            t = table.T[basis][: pa.size, : pb.size]
            entries[(basis, alpha, beta)] = (float(pa @ y @ pb), float(pa @ t @ pb))
    return GainTable(entries)


def compute_gain_table(
    sources: SourceSet,
    channel: ChannelParams,
    det: DetectorParams = DetectorParams(),
    tail_epsilon: float = DEFAULT_TAIL_EPSILON,
    photon_cutoff: Optional[int] = None,
) -> GainTable:
    """Gains S and wrong-bit probabilities T for every source pair in both bases.

    ``photon_cutoff`` forces a common truncation for all Poisson sources and the
    yield table; by default each source keeps its own minimal truncation and
    the yield table is sized for intensities up to ``MAX_INTENSITY``.
    """
    dists = source_distributions(sources, tail_epsilon, photon_cutoff)
    return gains_from_yields(yield_table(channel, det, table_cutoff(dists, photon_cutoff, tail_epsilon)), dists)


def table_cutoff(dists, photon_cutoff=None, tail_epsilon=DEFAULT_TAIL_EPSILON) -> int:
    if photon_cutoff is not None:
        return photon_cutoff
    return max([default_cutoff(tail_epsilon)] + [d.cutoff for d in dists.values()])
