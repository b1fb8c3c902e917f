"""
Sweep harness tests: average gain, antenna-count and TTD-range sweeps,
squint profiles and sweep validation.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from precoding.closed_form import theorem1_design
from precoding.errors import InvalidArgumentError
from precoding.precoder import FullyDigitalPrecoder
from workers.sweeps import (
    FIG4_TMAX_PS,
    GainRecord,
    SweepSpec,
    averages,
    average_gain,
    default_scenario,
    evaluate_point,
    run_fig1,
    run_fig3,
    run_fig4,
    run_sweep,
)


@pytest.fixture(scope="module")
def fig4_records():
    return run_fig4(default_scenario(), 256, FIG4_TMAX_PS, designers=("theorem1", "baseline", "fully_digital"))


@pytest.fixture(scope="module")
def fig3_records():
    return run_fig3(default_scenario())


# ============================================================================
# AVERAGE GAIN
# ============================================================================

def test_default_scenario():
    sc = default_scenario()
    assert sc.grid.fc == 300e9 and sc.grid.num_subcarriers == 129
    assert sc.geom.num_antennas == 256 and sc.geom.num_ttd == 16
    assert list(sc.psi_c) == [0.8] and sc.t_max == 340e-12


def test_fully_digital_average_is_one(fig_scenario):
    [record] = evaluate_point((fig_scenario, "none", "fully_digital", None))
    assert record.average == pytest.approx(1.0, abs=1e-12)


def test_fully_digital_goes_through_array_gain(make_scenario, monkeypatch):
    sc = make_scenario(nt=32, m=4, psi=[0.3, -0.6], tmax_ps=40.0)
    records = evaluate_point((sc, "none", "fully_digital", None))
    assert [r.rf_chain for r in records] == [1, 2]
    for record in records:
        np.testing.assert_allclose(record.gains, 1.0, atol=1e-12)

    column = FullyDigitalPrecoder.column
    monkeypatch.setattr(FullyDigitalPrecoder, "column", lambda self, k, l: 1.5 * column(self, k, l))
    with pytest.raises(InvalidArgumentError):
        evaluate_point((sc, "none", "fully_digital", None))


def test_average_without_bandwidth_is_one(make_scenario):
    sc = make_scenario(nt=64, m=8, psi=0.8, tmax_ps=500.0, ratio=0.0)
    assert average_gain(theorem1_design(sc), sc, 1) == pytest.approx(1.0, abs=1e-9)


def test_average_gain_at_reference_operating_point(fig_scenario):
    gain = average_gain(theorem1_design(fig_scenario.replace(t_max=400e-12)), fig_scenario, 1)
    assert 0.92 <= gain <= 0.96


# ============================================================================
# TTD-RANGE SWEEP
# ============================================================================

def test_tmax_sweep_plateau(fig4_records):
    theorem1 = averages(fig4_records, "theorem1")
    assert 0.92 <= theorem1[400e-12] <= 0.96
    assert abs(theorem1[330e-12] - theorem1[400e-12]) <= 0.01


def test_tmax_sweep_monotone(fig4_records):
    theorem1 = averages(fig4_records, "theorem1")
    values = [theorem1[ps / 1e12] for ps in FIG4_TMAX_PS]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_baseline_catches_up_without_clipping(fig4_records):
    theorem1 = averages(fig4_records, "theorem1")
    baseline = averages(fig4_records, "baseline")
    for ps in range(350, 401, 10):
        assert baseline[ps / 1e12] == pytest.approx(theorem1[ps / 1e12], abs=1e-9)
    assert baseline[340e-12] < theorem1[340e-12]
    assert theorem1[200e-12] >= baseline[200e-12]


def test_tmax_sweep_dominance(fig4_records):
    theorem1 = averages(fig4_records, "theorem1")
    baseline = averages(fig4_records, "baseline")
    digital = averages(fig4_records, "fully_digital")
    for value in theorem1:
        assert theorem1[value] >= baseline[value] - 1e-9
        assert theorem1[value] <= digital[value] + 1e-9


def test_records_are_bounded(fig4_records):
    for record in fig4_records:
        assert np.all(record.gains >= 0) and np.all(record.gains <= 1 + 1e-9)
        assert record.gains.size == 129


# ============================================================================
# ANTENNA-COUNT SWEEP
# ============================================================================

def test_small_arrays_match(fig3_records):
    theorem1 = averages(fig3_records, "theorem1")
    baseline = averages(fig3_records, "baseline")
    for nt in (32, 64):
        assert theorem1[nt] == pytest.approx(baseline[nt], abs=1e-9)


def test_large_arrays_favor_closed_form(fig3_records):
    theorem1 = averages(fig3_records, "theorem1")
    baseline = averages(fig3_records, "baseline")
    for nt in (256, 512, 1024):
        assert theorem1[nt] >= baseline[nt] - 1e-9
    assert theorem1[1024] > baseline[1024]
    assert theorem1[1024] < theorem1[256]


def test_sweep_order_is_deterministic(fig_scenario):
    spec = SweepSpec(scenario=fig_scenario, variable="nt", values=(32.0, 64.0), designers=("theorem1", "baseline"))
    serial = run_sweep(spec, workers=1)
    parallel = run_sweep(spec, workers=2)
    assert [(r.designer, r.swept_value) for r in serial] == [
        ("theorem1", 32.0), ("baseline", 32.0), ("theorem1", 64.0), ("baseline", 64.0)
    ]
    assert [(r.designer, r.swept_value) for r in parallel] == [(r.designer, r.swept_value) for r in serial]
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.gains, b.gains)


def test_multichain_records(make_scenario):
    sc = make_scenario(nt=32, m=4, psi=[0.3, -0.6], tmax_ps=40.0)
    records = run_sweep(SweepSpec(scenario=sc, designers=("theorem1",)))
    assert [r.rf_chain for r in records] == [1, 2]
    assert all(r.swept_value is None for r in records)


# ============================================================================
# VALIDATION
# ============================================================================

def test_sweep_rejects_bad_antenna_counts(fig_scenario):
    with pytest.raises(ValidationError):
        SweepSpec(scenario=fig_scenario, variable="nt", values=(250.0,))
    with pytest.raises(ValidationError):
        SweepSpec(scenario=fig_scenario, variable="tmax", values=(-1e-12,))
    with pytest.raises(ValidationError):
        SweepSpec(scenario=fig_scenario, variable="tmax", values=())
    with pytest.raises(ValidationError):
        SweepSpec(scenario=fig_scenario, designers=("oracle",))


def test_gain_record_rejects_out_of_range_gain():
    with pytest.raises(ValidationError):
        GainRecord(designer="theorem1", swept_var="none", gains=[0.5, 1.1])


# ============================================================================
# SQUINT PROFILES
# ============================================================================

def test_fig1_profiles(fig_grid):
    rows = run_fig1(fig_grid, 0.8, (16, 128, 1024))
    assert len(rows) == 3 * 129
    for nt in (16, 128, 1024):
        gains = np.array([g for n, _, g in rows if n == nt])
        assert gains[64] == pytest.approx(1.0, abs=1e-12)
        assert int(np.argmax(gains)) == 64
        np.testing.assert_allclose(gains, gains[::-1], atol=1e-9)


def test_fig1_single_antenna_is_flat(fig_grid):
    gains = [g for _, _, g in run_fig1(fig_grid, 0.8, (1,))]
    np.testing.assert_allclose(gains, 1.0, atol=1e-12)

