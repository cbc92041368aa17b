import numpy as np
import pytest

from sav_bottleneck.analytics import stability
from sav_bottleneck.core.errors import NoSuchEquilibriumError


def test_velocity_signs_under_average_cost(base):
    rule = stability.AVERAGE_COST
    assert stability.velocity(base, rule, 30.0) < 0.0
    assert stability.velocity(base, rule, 300.0) > 0.0
    assert stability.velocity(base, rule, 950.0) < 0.0


@pytest.mark.parametrize("n_a", [0.0, 60.0, 900.0])
def test_rest_points_have_zero_velocity(base, n_a):
    assert stability.velocity(base, stability.AVERAGE_COST, n_a) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("protocol", stability.PROTOCOLS)
def test_velocity_sign_follows_cost_gap(base, protocol, rng):
    rule = stability.AVERAGE_COST
    states = rng.uniform(1.0, base.n_total - 1.0, size=2000)
    v = stability.velocity(base, rule, states, protocol)
    g = stability.cost_gap_path(base, rule, states)
    assert np.array_equal(np.sign(v), np.sign(g))


def test_rest_points_under_average_cost(base):
    points = stability.rest_points(base, stability.AVERAGE_COST)
    assert [label for label, _, _ in points] == ["AC0", "AC1", "AC2"]
    assert [n for _, n, _ in points] == pytest.approx([0.0, 60.0, 900.0])
    assert not any(degenerate for _, _, degenerate in points)


def test_fixed_fare_rest_point_is_mc_split(base):
    points = stability.rest_points(base, stability.fixed_fare(100.0))
    assert points[0][0] == "interior"
    assert points[0][1] == pytest.approx(960.0)


def test_trajectories_split_at_unstable_root(base):
    below = stability.integrate(base, stability.AVERAGE_COST, 59.0)
    above = stability.integrate(base, stability.AVERAGE_COST, 61.0)
    assert below.converged_label == "AC0"
    assert above.converged_label == "AC2"
    assert above.converged_to == pytest.approx(900.0)
    assert np.all(np.diff(below.times) > 0)


@pytest.mark.parametrize("protocol", stability.PROTOCOLS)
def test_classification_is_protocol_independent(base, protocol):
    report = stability.classify(base, stability.AVERAGE_COST, protocol)
    assert report.status_of("AC0") == "stable"
    assert report.status_of("AC1") == "unstable"
    assert report.status_of("AC2") == "stable"


def test_coincident_root_is_unstable_and_flagged(base):
    report = stability.classify(base.with_updates(f_a=552_960.0))
    tangency = next(rp for rp in report.rest_points if rp.label == "AC2")
    assert tangency.status == "unstable"
    assert tangency.degenerate
    assert tangency.n_a == pytest.approx(480.0)
    assert report.status_of("AC0") == "stable"


def test_basin_threshold_sits_at_ac1(base):
    assert stability.locate_basin_threshold(base) == pytest.approx(60.0, abs=0.1)


def test_basin_threshold_needs_two_roots(base):
    with pytest.raises(NoSuchEquilibriumError):
        stability.locate_basin_threshold(base.with_updates(f_a=600_000.0))


def test_integrate_rejects_state_outside_population(base):
    with pytest.raises(ValueError):
        stability.integrate(base, stability.AVERAGE_COST, 1500.0)


def test_lsoda_integrator_agrees(base):
    from sav_bottleneck.core.config import settings

    cfg = settings.model_copy(update={"integrator": "lsoda"})
    traj = stability.integrate(base, stability.AVERAGE_COST, 200.0, cfg=cfg)
    assert traj.converged_label == "AC2"


def test_trajectory_frame_columns(base):
    traj = stability.integrate(base, stability.AVERAGE_COST, 200.0)
    frame = stability.trajectory_frame(base, stability.AVERAGE_COST, traj)
    assert list(frame.columns) == ["u", "n_a", "c_n", "c_a", "fare", "velocity"]
    assert len(frame) == len(traj.states)


def test_fixed_mc_fare_has_one_stable_interior_point(base):
    report = stability.classify(base, stability.fixed_fare(base.m))
    assert len(report.rest_points) == 1
    point = report.rest_points[0]
    assert point.label == "interior"
    assert point.n_a == pytest.approx(960.0)
    assert point.status == "stable"


def test_trajectory_from_rest_point_stays_put(base):
    traj = stability.integrate(base, stability.AVERAGE_COST, 900.0)
    assert traj.converged
    assert traj.converged_label == "AC2"
    np.testing.assert_allclose(traj.states, 900.0)


@pytest.mark.parametrize("protocol", stability.PROTOCOLS)
@pytest.mark.parametrize("fare_rule", ["average_cost", "mc"])
def test_velocity_vanishes_at_solver_equilibria(base, protocol, fare_rule):
    rule = stability.AVERAGE_COST if fare_rule == "average_cost" else stability.fixed_fare(base.m)
    for _, n_star, _ in stability.rest_points(base, rule):
        assert abs(stability.velocity(base, rule, n_star, protocol)) < 1e-12


def test_zero_fixed_cost_drops_empty_rest_point(base):
    points = stability.rest_points(base.with_updates(f_a=0.0), stability.AVERAGE_COST)
    assert [label for label, _, _ in points] == ["AC2"]
    assert points[0][1] == pytest.approx(960.0)
