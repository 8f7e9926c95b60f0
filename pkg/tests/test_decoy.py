import io
import math

import pytest

from mdidecoy.decoy import (
    DegenerateDecoyError,
    TildeQuantities,
    UndefinedBoundError,
    e11_upper_bound,
    estimate_bounds,
    read_gain_csv,
    s11_lower_bound,
    s11_lower_bound_raw,
    tilde_quantities,
    write_gain_csv,
)
from mdidecoy.optics import (
    ChannelParams,
    DetectorParams,
    GainTable,
    IncompleteDataError,
    compute_gain_table,
    default_cutoff,
    yield_table,
)
from mdidecoy.source import DecoyConditionError, PhotonNumberDistribution, SourceSet, poisson_distribution

TYPICAL_DET = DetectorParams(3.0e-6, 0.015)
X1, Y1 = poisson_distribution(0.1), poisson_distribution(0.15)


def _uniform_gains(s):
    return GainTable({("Z", a, b): (s, s / 2) for a in "oxy" for b in "oxy"})


def _simulated(loss, det=TYPICAL_DET, sources=None):
    sources = sources or SourceSet()
    return sources, compute_gain_table(sources, ChannelParams(loss), det)


class TestTilde:
    def test_telescoping_cancellation(self):
        vac = PhotonNumberDistribution([1.0])
        tq = tilde_quantities(_uniform_gains(0.3), "Z", vac, vac, vac, vac)
        assert tq.S_tilde_xx == 0.0
        assert tq.T_tilde_xx == 0.0

    def test_no_vacuum_component(self):
        no_vac = PhotonNumberDistribution([0.0, 0.6, 0.4])
        gains = GainTable({("Z", a, b): (0.1 + 0.01 * i, 0.01) for i, (a, b) in enumerate((a, b) for a in "oxy" for b in "oxy")})
        tq = tilde_quantities(gains, "Z", no_vac, no_vac, no_vac, no_vac)
        assert tq.S_tilde_xx == gains.S("Z", "x", "x")
        assert tq.S_tilde_yy == gains.S("Z", "y", "y")

    def test_simulated_matches_hand_recomputation(self):
        _, gains = _simulated(20.0)
        a0, b0p = X1[0], Y1[0]
        tq = tilde_quantities(gains, "X", X1, Y1, X1, Y1)
        s = lambda a, b: gains.S("X", a, b)
        assert tq.S_tilde_xy == pytest.approx(s("x", "y") - a0 * s("o", "y") - b0p * s("x", "o") + a0 * b0p * s("o", "o"), rel=1e-14)
        assert tq.S_tilde_xy > 0

    def test_tilde_equals_multi_photon_sum(self):
        # S~_xx is the part of S_xx where both sides emitted at least one photon
        sources, gains = _simulated(20.0)
        table = yield_table(ChannelParams(20.0), TYPICAL_DET, default_cutoff())
        pa = X1.padded(table.cutoff)
        direct = sum(
            pa[n] * pa[m] * table.Y["Z"][n, m] for n in range(1, table.cutoff + 1) for m in range(1, table.cutoff + 1)
        )
        tq = tilde_quantities(gains, "Z", X1, Y1, X1, Y1)
        assert tq.S_tilde_xx == pytest.approx(direct, rel=1e-11)

    def test_missing_entry(self):
        gains = GainTable({("Z", "x", "x"): (0.1, 0.01)})
        with pytest.raises(IncompleteDataError):
            tilde_quantities(gains, "Z", X1, Y1, X1, Y1)


class TestYieldBound:
    def test_zero_tilde_gives_zero(self):
        tq = TildeQuantities("Z", 0.0, 0.0, 0.0, 0.0, 0.0)
        assert s11_lower_bound(tq, X1, Y1, X1, Y1) == 0.0

    @pytest.mark.parametrize("loss", [0.0, 20.0, 40.0])
    def test_bound_is_sound_and_z_dominates(self, loss):
        _, gains = _simulated(loss)
        table = yield_table(ChannelParams(loss), TYPICAL_DET, default_cutoff())
        s_z = s11_lower_bound(tilde_quantities(gains, "Z", X1, Y1, X1, Y1), X1, Y1, X1, Y1)
        s_x = s11_lower_bound(tilde_quantities(gains, "X", X1, Y1, X1, Y1), X1, Y1, X1, Y1)
        assert 0 < s_z <= table.Y["Z"][1, 1]
        assert 0 < s_x <= table.Y["X"][1, 1]
        assert s_x <= s_z

    def test_equal_intensities_degenerate(self):
        tq = TildeQuantities("Z", 1e-4, 1e-6, 1e-4, 1e-4, 1e-4)
        with pytest.raises(DegenerateDecoyError):
            s11_lower_bound(tq, X1, X1, X1, X1)

    def test_misordered_sources_rejected(self):
        tq = TildeQuantities("Z", 1e-4, 1e-6, 1e-4, 1e-4, 1e-4)
        with pytest.raises(DecoyConditionError):
            s11_lower_bound(tq, Y1, X1, X1, Y1)

    def test_raw_value_nonnegative_on_clean_data(self):
        for loss in (0.0, 10.0, 20.0, 30.0, 40.0):
            _, gains = _simulated(loss)
            for basis in ("Z", "X"):
                raw = s11_lower_bound_raw(tilde_quantities(gains, basis, X1, Y1, X1, Y1), X1, Y1, X1, Y1)
                assert raw >= -1e-12


class TestErrorBound:
    def test_no_errors(self):
        assert e11_upper_bound(0.0, 0.09, 0.09, 1e-3) == 0.0

    def test_clamped_at_one(self):
        assert e11_upper_bound(1.0, 0.09, 0.09, 1e-3) == 1.0

    def test_zero_yield_bound(self):
        with pytest.raises(UndefinedBoundError):
            e11_upper_bound(1e-6, 0.09, 0.09, 0.0)

    def test_simulated_ordering(self):
        sources, gains = _simulated(20.0)
        b = estimate_bounds(gains, sources)
        true_e = yield_table(ChannelParams(20.0), TYPICAL_DET, default_cutoff()).e11("X")
        assert b.e11_upper_X_via_Z <= b.e11_upper_X
        assert b.e11_upper_X_via_Z >= true_e
        assert b.basis_used == "Z"

    def test_same_yield_bound_same_result(self):
        _, gains = _simulated(20.0)
        t = tilde_quantities(gains, "X", X1, None, X1, None).T_tilde_xx
        assert e11_upper_bound(t, X1[1], X1[1], 0.004) == e11_upper_bound(t, X1[1], X1[1], 0.004)


def test_one_basis_configuration():
    sources, gains = _simulated(20.0, sources=SourceSet.symmetric(0.1, 0.15, signal_x=None))
    b = estimate_bounds(gains, sources)
    assert math.isnan(b.s11_lower_X) and math.isnan(b.e11_upper_X)
    assert b.s11_lower_Z > 0 and 0 < b.e11_upper_X_via_Z < 1


def test_gain_csv_round_trip(tmp_path):
    sources, gains = _simulated(20.0)
    path = tmp_path / "gains.csv"
    with open(path, "w", newline="") as fh:
        write_gain_csv(gains, fh)
    loaded = read_gain_csv(path)
    assert loaded.entries == gains.entries
    assert estimate_bounds(loaded, sources) == estimate_bounds(gains, sources)


def test_gain_csv_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("basis,alpha,beta,S,T\nZ,x,x,0.1,0.2\n")
    with pytest.raises(ValueError, match="T <= S"):
        read_gain_csv(path)
    path.write_text("basis,alpha,S,T\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_gain_csv(path)
    path.write_text("basis,alpha,beta,S,T\nY,x,x,0.1,0.0\n")
    with pytest.raises(ValueError, match="bad source key"):
        read_gain_csv(path)


def test_write_csv_header():
    buf = io.StringIO()
    write_gain_csv(_uniform_gains(0.2), buf)
    assert buf.getvalue().splitlines()[0] == "basis,alpha,beta,S,T"
