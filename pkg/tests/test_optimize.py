import math

import numpy as np
import pytest

from mdidecoy.keyrate import PROTOCOLS, evaluate_rates
from mdidecoy.optics import ChannelParams
from mdidecoy.optimize import (
    SweepConfig,
    golden_section_max,
    loss_points,
    optimize_point,
    sources_for,
    sweep,
)
from mdidecoy.source import DecoyConditionError, SourceSet

CONFIG = SweepConfig()


def test_loss_points_inclusive():
    assert loss_points(0.0, 2.0, 0.5) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert loss_points(0.0, 40.0, 1.0)[-1] == 40.0
    assert len(loss_points(0.0, 40.0, 1.0)) == 41
    assert loss_points(5.0, 1.0, 1.0) == []


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(loss_step=0.0)
    with pytest.raises(ValueError):
        SweepConfig(grid_points=10)
    with pytest.raises(ValueError):
        SweepConfig(search_max=2.0)
    with pytest.raises(ValueError):
        SweepConfig(protocols=("bogus",))
    with pytest.raises(ValueError):
        SweepConfig(rel_tol=0.01)


def test_golden_section_on_known_peak():
    x, fx = golden_section_max(lambda x: -(math.log(x) - math.log(0.3)) ** 2, 1e-3, 1.5, 1e-6)
    assert x == pytest.approx(0.3, rel=1e-5)
    assert fx == pytest.approx(0.0, abs=1e-10)


def test_sources_for_layout():
    base = SourceSet()
    s = sources_for("z_anchored", base, 0.1, 0.4)
    assert s.alice_z.signal == 0.4 and s.alice_x.signal is None
    s = sources_for("x_anchored", base, 0.05, 0.4)
    assert s.alice_z.decoy is None and s.alice_x.decoy == 0.05 and s.alice_x.signal == 0.15
    with pytest.raises(DecoyConditionError):
        sources_for("standard", base, 0.3, 0.2)


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_optimum_beats_fine_grid(protocol):
    res = optimize_point(20.0, CONFIG, protocol)
    ratio = 1.001
    grid = np.exp(np.arange(math.log(1e-3), math.log(1.5), math.log(ratio)))
    lo = res.decoy * (1 + 1e-6) if protocol in ("standard", "z_anchored") else 0.0
    best = max(
        evaluate_rates(sources_for(protocol, CONFIG.sources, res.decoy, s), ChannelParams(20.0)).rate(protocol)
        for s in grid[(grid > lo) & (np.abs(np.log(grid / res.signal)) < 0.2)]
    )
    assert res.rate >= best * (1 - 1e-6)
    # an interior optimum, away from the search bounds
    assert 0.01 < res.signal < 1.4


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_optimized_at_least_fixed(protocol):
    fixed = evaluate_rates(CONFIG.sources, ChannelParams(20.0)).rate(protocol)
    assert optimize_point(20.0, CONFIG, protocol).rate >= fixed


def test_optimum_moves_with_loss():
    low = optimize_point(0.0, CONFIG, "standard")
    high = optimize_point(20.0, CONFIG, "standard")
    assert high.rate < low.rate
    assert high.signal < low.signal


def test_sentinel_when_no_positive_rate():
    res = optimize_point(80.0, CONFIG, "standard")
    assert res.rate == 0.0
    assert math.isnan(res.decoy) and math.isnan(res.signal)


def test_z_anchored_positive_range_not_shorter():
    def last_positive(protocol):
        last = None
        for loss in np.arange(50.0, 56.0, 0.5):
            if evaluate_rates(CONFIG.sources, ChannelParams(loss)).rate(protocol) > 0:
                last = loss
        return last

    assert last_positive("z_anchored") >= last_positive("standard")


def test_free_decoy():
    cfg = SweepConfig(free_decoy=True)
    res = optimize_point(20.0, cfg, "z_anchored")
    fixed = optimize_point(20.0, CONFIG, "z_anchored")
    assert res.decoy < res.signal
    assert res.rate >= fixed.rate * (1 - 1e-9)


def test_empty_sweep():
    assert sweep(SweepConfig(loss_start=10, loss_stop=0)) == []


def test_sweep_deterministic_and_parallel_invariant():
    cfg = SweepConfig(loss_start=0, loss_stop=30, loss_step=10, protocols=("standard", "z_anchored"))
    serial = sweep(cfg)
    again = sweep(cfg)
    parallel = sweep(cfg, parallel=2)
    assert serial == again == parallel
    assert [r.loss_db for r in serial] == [0.0, 10.0, 20.0, 30.0]
    for row in serial:
        assert set(row.optima) == {"standard", "z_anchored"}
