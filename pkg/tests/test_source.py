import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdidecoy.source import (
    BasisIntensities,
    DecoyConditionError,
    DegenerateSourceError,
    PhotonNumberDistribution,
    SourceSet,
    check_decoy_condition,
    poisson_distribution,
)


def test_vacuum_is_point_mass():
    d = poisson_distribution(0.0)
    assert d.cutoff == 0
    assert d.probs.tolist() == [1.0]


def test_zero_photon_probability_matches_high_precision():
    # exp(-0.1) to 40 digits via mpmath
    expected = 0.9048374180359595731642490594464366211947
    assert poisson_distribution(0.1).probs[0] == pytest.approx(expected, rel=1e-15)


def test_cutoff_is_minimal_for_tail_mass():
    mpmath.mp.dps = 40
    mu = mpmath.mpf("0.15")

    def tail(c):
        return 1 - sum(mpmath.e ** (-mu) * mu**k / mpmath.factorial(k) for k in range(c + 1))

    d = poisson_distribution(0.15, tail_epsilon=1e-12)
    assert tail(d.cutoff) < 1e-12
    assert tail(d.cutoff - 1) >= 1e-12
    assert d.cutoff == 8


def test_negative_mean_rejected():
    with pytest.raises(ValueError):
        poisson_distribution(-0.1)


@pytest.mark.parametrize("eps", [0.0, 1e-6, 0.1])
def test_tail_epsilon_range(eps):
    with pytest.raises(ValueError):
        poisson_distribution(0.1, tail_epsilon=eps)


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0.0, 2.0), eps=st.sampled_from([1e-12, 1e-9, 1e-7]))
def test_normalization(mu, eps):
    d = poisson_distribution(mu, tail_epsilon=eps)
    assert np.all((d.probs >= 0) & (d.probs <= 1))
    assert 1 - eps <= math.fsum(d.probs) <= 1 + 1e-15


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0.01, 2.0), c=st.integers(0, 25))
def test_mass_monotone_in_cutoff(mu, c):
    # fsum is correctly rounded, so adding a nonnegative term cannot lower it
    assert math.fsum(poisson_distribution(mu, cutoff=c + 1).probs) >= math.fsum(poisson_distribution(mu, cutoff=c).probs)


def test_decoy_condition_poisson_ordered():
    assert check_decoy_condition(poisson_distribution(0.1), poisson_distribution(0.15)).ok


def test_decoy_condition_poisson_swapped():
    check = check_decoy_condition(poisson_distribution(0.15), poisson_distribution(0.1))
    assert not check.ok
    assert check.violating_k == 2


def test_decoy_condition_zero_denominator_counts_as_satisfied():
    x = PhotonNumberDistribution([0.5, 0.5])
    y = PhotonNumberDistribution([0.25, 0.25, 0.5])
    assert check_decoy_condition(x, y) == (True, None)


def test_decoy_condition_late_violation():
    x = PhotonNumberDistribution([0.4, 0.3, 0.2, 0.1])
    y = PhotonNumberDistribution([0.3, 0.2, 0.4, 0.05])
    assert check_decoy_condition(x, y) == (False, 3)


def test_decoy_condition_needs_single_photon_component():
    with pytest.raises(DegenerateSourceError):
        check_decoy_condition(PhotonNumberDistribution([0.5, 0.0, 0.5]), poisson_distribution(0.1))


@settings(max_examples=60, deadline=None)
@given(a=st.floats(1e-3, 1.4), b=st.floats(1e-3, 1.4))
def test_decoy_condition_holds_for_ordered_poisson(a, b):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-6:
        return
    assert check_decoy_condition(poisson_distribution(lo), poisson_distribution(hi)).ok


def test_distribution_validation():
    with pytest.raises(ValueError):
        PhotonNumberDistribution([0.7, 0.7])
    with pytest.raises(ValueError):
        PhotonNumberDistribution([-0.1, 0.5])


def test_padding():
    d = PhotonNumberDistribution([0.5, 0.5])
    assert d.padded(3).tolist() == [0.5, 0.5, 0.0, 0.0]
    assert d[5] == 0.0


def test_source_set_defaults_and_ordering():
    s = SourceSet()
    assert s.intensities("A", "Z") == BasisIntensities(0.1, 0.15)
    assert s.labels("B", "X") == ("o", "x", "y")
    assert s.distribution("A", "Z", "o").probs.tolist() == [1.0]
    with pytest.raises(DecoyConditionError):
        BasisIntensities(0.2, 0.1)
    one_basis = SourceSet.symmetric(0.1, 0.15, signal_x=None)
    assert one_basis.labels("A", "X") == ("o", "x")
    assert one_basis.distribution("A", "X", "y") is None
    assert math.isclose(one_basis.distribution("A", "Z", "y").intensity, 0.15)
