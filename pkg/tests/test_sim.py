import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ampc.adaptation import LookupTable, TableEntry, TunedParams
from ampc.config import load_scenario
from ampc.sim import (
    TRACE_COLUMNS,
    Profile,
    Reference,
    Scenario,
    SimConfig,
    SimResult,
    double_lane_change,
    mse,
    run_scenario,
    sine_path,
    step_scenario,
)
from ampc.vehicle import PlantState


def test_dlc_levels():
    assert double_lane_change(0.0) == 0.0
    assert double_lane_change(29.9) == 0.0
    assert double_lane_change(70.0) == 3.5
    assert double_lane_change(55.0) == 3.5 and double_lane_change(85.0) == 3.5
    assert double_lane_change(500.0) == 0.0


def test_dlc_is_c1():
    h, d = 1e-8, 1e-6

    def slope(s):
        return (double_lane_change(s + h) - double_lane_change(s - h)) / (2 * h)

    for join in (30.0, 55.0, 85.0, 110.0):
        assert abs(slope(join - d) - slope(join + d)) < 1e-6


def test_sine_path_shape():
    assert sine_path(0.0) == 0.0
    assert sine_path(50.0) == pytest.approx(8 * math.sin(math.pi / 2) + 4 * math.sin(2 * math.pi * 50 / 90))


def test_profiles():
    const = Profile.constant(9.0)
    assert all(const(t) == 9.0 for t in (0.0, 3.3, 15.0))
    ramp = Profile((0.0, 10.0, 20.0), (10.0, 20.0, 20.0))
    assert ramp(10.0) == 20.0 and ramp(5.0) == 15.0
    sc = Scenario("s", 20.0, speed=ramp)
    assert sc.speed_at(-1.0) == 10.0 and sc.speed_at(99.0) == 20.0


def test_gust_profile():
    wind = Profile.gusts([(5.0, 3.0, 0.5, 2500.0)])
    assert wind(0.0) == 0.0 and wind(4.9) == 0.0
    assert wind(5.25) == pytest.approx(1250.0)
    assert wind(7.0) == 2500.0 and wind(9.0) == 0.0


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario("s", 0.0)
    with pytest.raises(ValueError):
        Scenario("s", 5.0, speed=Profile.constant(0.05))
    with pytest.raises(ValueError):
        Reference("spiral")(0.0)


def _result(err):
    err = np.asarray(err, dtype=float)
    trace = {c: np.zeros_like(err) for c in TRACE_COLUMNS}
    trace["y"] = err
    return SimResult("s", "mpc", trace, False, 0)


def test_mse_examples():
    assert mse(_result([0.0, 0.0])) == 0.0
    assert mse(_result([0.5] * 7)) == pytest.approx(0.25)
    assert mse(_result([0.0, 1.0])) == 0.5
    with pytest.raises(ValueError):
        mse(_result([]))


@pytest.mark.parametrize("controller", ["mpc", "pp", "ampc"])
def test_on_path_stays_on_path(controller):
    table = LookupTable((TableEntry(9.0, 0.0, TunedParams(45, 15, 10.0, 0.01, 5, 0.75), 0.0),), (9.0,), (0.0,))
    res = run_scenario(Scenario("zero", 5.0), controller, table=table)
    assert res.mse < 1e-9 and not res.diverged and res.violations == 0
    lengths = {len(v) for v in res.trace.values()}
    assert lengths == {50}


def test_ampc_requires_table():
    with pytest.raises(ValueError):
        run_scenario(Scenario("zero", 1.0), "ampc")
    with pytest.raises(ValueError):
        run_scenario(Scenario("zero", 1.0), "lqr")


def test_replay_is_bit_identical(root):
    sc = load_scenario(root / "configs/scenarios/sc1.yaml")
    a = run_scenario(sc, "mpc")
    b = run_scenario(sc, "mpc")
    for c in TRACE_COLUMNS:
        np.testing.assert_array_equal(a.trace[c], b.trace[c])


def test_step_maneuver_tracks_and_respects_bounds():
    res = run_scenario(step_scenario(9.0, 4.0, 15.0), "mpc")
    assert res.violations == 0 and not res.diverged
    assert abs(res.error[-1]) < 0.05
    assert np.all(np.abs(res.trace["delta_f"]) <= math.pi / 6 + 1e-9)
    assert np.all(np.abs(res.trace["d_delta_f"]) <= math.pi / 12 + 1e-9)


def test_pure_pursuit_loses_sc2(root):
    res = run_scenario(load_scenario(root / "configs/scenarios/sc2.yaml"), "pp")
    assert res.degraded(SimConfig().degraded_error)


def test_parameter_switch_is_recorded():
    slow = TunedParams(30, 10, 20.0, 0.05, 4, 0.5)
    table = LookupTable((TableEntry(9.0, 0.0, TunedParams(45, 15, 10.0, 0.01, 5, 0.75), 0.0),
                         TableEntry(9.0, 4.0, slow, 0.0)), (9.0,), (0.0, 4.0))
    res = run_scenario(step_scenario(9.0, 4.0, 10.0), "ampc", table=table)
    assert res.trace["np"][0] == 30
    assert res.trace["np"][-1] == 45
    changes = np.flatnonzero(np.diff(res.trace["np"]) != 0)
    assert np.all(np.diff(res.trace["t"][changes]) >= 0.5 - 1e-9)


def test_write_outputs(tmp_path):
    res = run_scenario(Scenario("zero", 0.5), "mpc")
    res.write(tmp_path)
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == ",".join(TRACE_COLUMNS)
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("mse,max_abs_error,violations,diverged")


@given(st.floats(-2.0, 2.0))
def test_initial_offset_is_reduced(y0):
    sc = Scenario("off", 6.0, initial=PlantState(global_y=y0, long_vel=9.0))
    res = run_scenario(sc, "mpc")
    assert abs(res.error[-1]) <= abs(y0) * 0.5 + 1e-6


@pytest.fixture(scope="module")
def shipped(root):
    from ampc.adaptation import load_table
    return load_table(root / "data/ampc_table.json")


@pytest.mark.parametrize("name", ["sc2", "sc3", "sc3_wind"])
def test_switches_at_most_every_half_second(root, shipped, name):
    res = run_scenario(load_scenario(root / f"configs/scenarios/{name}.yaml"), "ampc", table=shipped)
    keys = np.column_stack([res.trace[c] for c in ("np", "nc", "q_y", "r_w", "lag_n", "lag_alpha")])
    switched = np.flatnonzero(np.any(np.diff(keys, axis=0) != 0, axis=1)) + 1
    assert len(switched) > 0
    assert np.all(np.diff(res.trace["t"][switched]) >= 0.5 - 1e-9)


def test_sc1_ampc_beats_fixed_mpc(root, shipped):
    sc = load_scenario(root / "configs/scenarios/sc1.yaml")
    adaptive = run_scenario(sc, "ampc", table=shipped).mse
    fixed = run_scenario(sc, "mpc").mse
    assert adaptive < fixed, f"ampc mse {adaptive:.4g} vs fixed mpc {fixed:.4g}"
