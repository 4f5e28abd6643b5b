import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlinksim.analytics import (
    HERALD_FREE_MIN_FIDELITY,
    HERALD_FREE_MIN_SUCCESS,
    REPORTED_D_10,
    ChainSpec,
    ScalingCalibration,
    TimingParams,
    bell_pairs_per_logical_qubit,
    calibrate,
    cycle_time,
    cycle_time_lossy,
    heralded_rate,
    qubits_per_repeater,
    required_distance,
)
from qlinksim.config import ANALYTICS_DEFAULTS

PLANET = ScalingCalibration(
    int(ANALYTICS_DEFAULTS["d_ref"]), float(ANALYTICS_DEFAULTS["p_ref"]), REPORTED_D_10, 0.35, 0.96
)


def scan_distance(chain, cal, limit=100_000):
    """Smallest d meeting the budget, by walking d upward."""
    for d in range(1, limit):
        if chain.n_links * cal.p_link(d) <= chain.p_c:
            return d
    raise AssertionError("no distance found")


def test_cycle_time_examples():
    assert cycle_time(1, TimingParams(1, 1)) == 5
    assert cycle_time(300, TimingParams(0, 2.17e-9)) == pytest.approx(651e-9)
    assert cycle_time(3, TimingParams(0, 2e-9)) == pytest.approx(6e-9)


def test_cycle_time_lossy_examples():
    timing = TimingParams(0.4e-9, 0.567e-9)
    assert cycle_time_lossy(7, timing, 0) == cycle_time(7, timing)
    assert cycle_time_lossy(300, TimingParams(0, 2.167e-9), 0.35) == pytest.approx(1.0e-6, rel=0.05)
    assert cycle_time_lossy(5, timing, 0.5) == pytest.approx(2 * cycle_time(5, timing))
    with pytest.raises(ValueError):
        cycle_time_lossy(5, timing, 1.0)


@given(st.integers(1, 1000), st.floats(0, 0.95))
def test_cycle_times_linear_in_d(d, p_l):
    timing = TimingParams(1e-9, 2e-9)
    assert cycle_time(2 * d, timing) == pytest.approx(2 * cycle_time(d, timing))
    assert cycle_time_lossy(2 * d, timing, p_l) == pytest.approx(2 * cycle_time_lossy(d, timing, p_l))


def test_timing_validation():
    with pytest.raises(ValueError):
        TimingParams(-1, 1)
    with pytest.raises(ValueError):
        TimingParams(0, 0)
    with pytest.raises(ValueError):
        TimingParams(1, 1, 0)


def test_required_distance_examples():
    cal = ScalingCalibration(9, 0.1, 30)
    assert required_distance(ChainSpec(1, 0.1), cal) == 9
    d = required_distance(ChainSpec(10_000, 1e-6), PLANET)
    assert 200 <= d <= 400
    assert d == scan_distance(ChainSpec(10_000, 1e-6), PLANET)


def test_doubling_d10_doubles_extra_distance():
    chain = ChainSpec(10_000, 1e-6)
    base = ScalingCalibration(9, 0.1, 30)
    wide = ScalingCalibration(9, 0.1, 60)
    extra = required_distance(chain, base) - 9
    extra_wide = required_distance(chain, wide) - 9
    # both are ceilings of x and 2x
    assert 2 * extra - 1 <= extra_wide <= 2 * extra


@given(
    st.integers(1, 10**6),
    st.floats(1e-12, 0.5),
    st.floats(1e-4, 0.9),
    st.integers(1, 50),
    st.floats(1, 100),
)
def test_required_distance_matches_scan(n, p_c, p_ref, d_ref, d_10):
    cal = ScalingCalibration(d_ref, p_ref, d_10)
    chain = ChainSpec(n, p_c)
    assert required_distance(chain, cal) == scan_distance(chain, cal)


@given(st.integers(1, 10**5), st.floats(1e-10, 0.1), st.floats(1.01, 100))
def test_required_distance_monotone(n, p_c, factor):
    cal = ScalingCalibration(9, 0.12, 30)
    d = required_distance(ChainSpec(n, p_c), cal)
    assert required_distance(ChainSpec(n, min(p_c * factor, 0.99)), cal) <= d
    assert required_distance(ChainSpec(n * 2, p_c), cal) >= d


def test_required_distance_unreachable():
    with pytest.raises(ValueError):
        required_distance(ChainSpec(10, 1e-300), ScalingCalibration(9, 0.5, 1e6))


@pytest.mark.parametrize("d,k,expected", [(3, 2, 10), (300, 2, 1198), (1, 1, 1)])
def test_qubits_per_repeater(d, k, expected):
    assert qubits_per_repeater(d, k) == expected


def test_bell_pairs_per_logical_qubit():
    assert bell_pairs_per_logical_qubit(300) == 179_700


def test_heralded_rate_single_pair():
    cal = ScalingCalibration(1, 0.01, 30)
    timing = TimingParams(1e-9, 1e-9, t_b=1e-6)
    assert heralded_rate(ChainSpec(1, 0.01), cal, timing) == pytest.approx(1e6)


def test_heralded_rate_generators():
    cal = ScalingCalibration(9, 0.1, 30)
    timing = TimingParams(1e-9, 1e-9, t_b=1e-6)
    chain = ChainSpec(100, 1e-4)
    d = required_distance(chain, cal)
    pairs = bell_pairs_per_logical_qubit(d)
    assert heralded_rate(chain, cal, timing, generators=4) == pytest.approx(1 / (1e-6 * math.ceil(pairs / 4)))
    with pytest.raises(ValueError):
        heralded_rate(chain, cal, timing, generators=0)


def test_heralded_rate_log_squared_band():
    timing = TimingParams(1e-9, 1e-9, t_b=1e-6)
    scaled = [
        heralded_rate(ChainSpec(n, 1e-6), PLANET, timing) * timing.t_b * math.log(n) ** 2
        for n in (10**2, 10**3, 10**4)
    ]
    assert min(scaled) > 0
    assert max(scaled) / min(scaled) <= 4


@given(st.floats(0, 1e-6), st.floats(1e-12, 1e-6))
def test_heralded_rate_ignores_gate_times(t_g, t_m):
    chain = ChainSpec(1000, 1e-6)
    reference = heralded_rate(chain, PLANET, TimingParams(1e-9, 1e-9, 2e-6))
    assert heralded_rate(chain, PLANET, TimingParams(t_g, t_m, 2e-6)) == reference


def test_calibration_validation():
    with pytest.raises(ValueError):
        ScalingCalibration(9, 1.5, 30)
    with pytest.raises(ValueError):
        ScalingCalibration(9, 0.1, 0)
    with pytest.raises(ValueError):
        ChainSpec(0, 0.1)
    assert ChainSpec(5, 0.1, s_b=0.65).p_l == pytest.approx(0.35)


def test_calibrate_small_run():
    cal = calibrate(p_l=0.35, fidelity=0.96, d_ref=5, trials=4000, seed=1)
    assert cal.d_ref == 5 and cal.d_10 == REPORTED_D_10
    assert 0 < cal.p_ref < 1
    with pytest.raises(ValueError):
        calibrate(p_l=0.0, fidelity=1.0, d_ref=3, trials=100)


def test_reported_regime_constants():
    assert HERALD_FREE_MIN_SUCCESS == 0.65
    assert HERALD_FREE_MIN_FIDELITY == 0.96
