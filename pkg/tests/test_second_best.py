import math

import numpy as np
import pytest

from sav_bottleneck.analytics import second_best
from sav_bottleneck.core.errors import ConfigError
from sav_bottleneck.utils.numerics import central_difference


def test_second_best_clamps_at_population(base):
    sb = second_best.solve_second_best(base)
    assert sb.n_a_unclamped == pytest.approx(2130.0)
    assert sb.clamped == "at_N"
    assert sb.n_a_sb == pytest.approx(1000.0)
    assert sb.fare_sb == pytest.approx(-2708.0)
    assert sb.fare_at_split == pytest.approx(base.m - 96.0)


def test_interior_second_best(base_eta_two_thirds):
    p = base_eta_two_thirds
    sb = second_best.solve_second_best(p)
    assert sb.clamped == "none"
    assert sb.n_a_sb == pytest.approx(813.3333, rel=1e-6)
    assert sb.fare_sb == pytest.approx(452.0)
    assert sb.fare_at_split == pytest.approx(sb.fare_sb)
    assert second_best.sc_derivative(p, sb.n_a_sb) == pytest.approx(0.0, abs=1e-6)
    grid = np.linspace(0.0, p.n_total, 3001)
    best_on_grid = min(second_best.sc_of_split(p, n) for n in grid)
    assert sb.sc_sb <= best_on_grid + 1e-9 * abs(best_on_grid)


@pytest.mark.parametrize("n_a", [100.0, 500.0, 900.0])
def test_sc_derivative_matches_finite_difference(base_eta_two_thirds, n_a):
    p = base_eta_two_thirds
    fd = central_difference(lambda n: second_best.sc_of_split(p, n), n_a, 1e-3)
    assert second_best.sc_derivative(p, n_a) == pytest.approx(fd, rel=1e-6)


def test_derivative_terms_sum_to_derivative(base_eta_two_thirds):
    terms = second_best.sc_derivative_terms(base_eta_two_thirds, 400.0)
    assert terms.sav_fare_transfer == pytest.approx(-terms.profit_fare_transfer)
    assert terms.total == pytest.approx(second_best.sc_derivative(base_eta_two_thirds, 400.0))


def test_sc_of_split_rejects_out_of_range(base):
    with pytest.raises(ValueError):
        second_best.sc_of_split(base, 1001.0)


def test_second_best_ordering(base):
    ordering = second_best.second_best_ordering(base)
    assert ordering["chain_holds"]
    assert ordering["asserted"]
    assert ordering["fare_below_m"]


def test_regime_social_costs_for_base(base):
    table = second_best.regime_social_costs(base)
    assert table.sc_mc == pytest.approx(537400.0)
    assert table.sc_ac2 == pytest.approx(883000.0)
    assert table.sc_monopoly == pytest.approx(3786040.0)
    assert table.sc_ac0 == pytest.approx(8140600.0)
    assert table.printed_sc_ac0 == pytest.approx(7881400.0)
    assert table.printed_sc_monopoly == pytest.approx(3526840.0)
    assert table.ranking == ["MC", "AC2", "Monopoly", "AC0"]
    assert table.chain_holds
    assert table.eta_regime == "eta>=1"
    assert table.fixed_cost_regime is None


def test_sc_differences_match_regime_values(base):
    diffs = second_best.sc_differences(base)
    table = second_best.regime_social_costs(base)
    assert diffs["ac2_minus_mc"] == pytest.approx(345600.0)
    assert diffs["ac2_minus_mc"] == pytest.approx(table.sc_ac2 - table.sc_mc)
    assert diffs["m_minus_mc"] == pytest.approx(table.sc_monopoly - table.sc_mc)
    assert diffs["m_minus_ac2"] == pytest.approx(table.sc_monopoly - table.sc_ac2)


def test_mid_eta_ranking_above_crossing(base_eta_two_thirds):
    thresholds = second_best.critical_thresholds(base_eta_two_thirds)
    assert thresholds["n_c_mc_ac"].value == pytest.approx(556.59, abs=0.01)
    assert thresholds["n_c_mc_m"].value is None
    table = second_best.regime_social_costs(base_eta_two_thirds)
    assert table.eta_regime == "1>eta>=1/2"
    assert table.ranking == ["AC2", "MC", "Monopoly", "AC0"]
    assert table.chain_holds


def test_low_eta_thresholds(base_eta_low):
    thresholds = second_best.critical_thresholds(base_eta_low)
    assert thresholds["f_a_c"].value == pytest.approx(2160.0)
    assert thresholds["n_c_mc_m"].value == pytest.approx(100.0)


def test_low_eta_ranking_puts_monopoly_first(base_eta_low):
    p = base_eta_low.with_updates(f_a=4320.0)
    thresholds = second_best.critical_thresholds(p)
    assert thresholds["n_c_ac_m"].value == pytest.approx(175.0, rel=1e-3)
    table = second_best.regime_social_costs(p)
    assert table.fixed_cost_regime == "f_a>=f_a_c"
    assert table.ranking == ["Monopoly", "AC2", "MC", "AC0"]
    assert table.expected_ranking == table.ranking
    assert table.chain_holds


def test_spurious_mc_ac_crossing_falls_back_to_entry_population(base_eta_low):
    p = base_eta_low.with_updates(f_a=6480.0)
    thresholds = second_best.critical_thresholds(p)
    assert thresholds["n_c_mc_ac"].value == pytest.approx(thresholds["n_min"].value)
    assert thresholds["n_c_mc_ac"].reason is not None


def test_welfare_grid(base):
    etas = [0.5, 1.0, 2.0]
    grid = second_best.welfare_grid(base, etas, n_a_steps=11)
    assert len(grid) == 33
    assert list(grid.columns) == ["eta", "kappa", "n_a", "sc"]
    assert grid["kappa"].iloc[0] == pytest.approx(second_best.kappa_for_eta(base.theta, 0.5))


def test_welfare_grid_rejects_eta_outside_kappa_range(base):
    with pytest.raises(ConfigError):
        second_best.welfare_grid(base, [4.0], n_a_steps=5)


def test_strategy_at_monopoly_level(base):
    report = second_best.recommend_strategy(base, 480.0)
    assert report.n_a1 == pytest.approx(60.0)
    assert report.activate_commuter_objective
    assert report.activate_social_objective
    assert len(report.steps) == 2


def test_strategy_defers_below_basin(base):
    report = second_best.recommend_strategy(base, 30.0)
    assert not report.activate_commuter_objective
    assert not report.activate_social_objective
    assert "unstable" in report.commuter_objective


def test_strategy_waits_for_capacity_effect(low_eta):
    report = second_best.recommend_strategy(low_eta, 4248.7)
    assert report.eta == pytest.approx(0.15)
    assert report.activate_commuter_objective
    assert not report.activate_social_objective
    assert len(report.steps) == 3
    assert second_best.kappa_for_eta(low_eta.theta, 0.5) < report.kappa_target < low_eta.kappa
    at_target = second_best.critical_thresholds(low_eta.with_updates(kappa=report.kappa_target))
    assert at_target["n_c_ac_m"].value == pytest.approx(low_eta.n_total, rel=1e-6)


def test_strategy_activates_once_kappa_reaches_target(low_eta):
    target = second_best.recommend_strategy(low_eta, 4248.7).kappa_target
    matured = second_best.recommend_strategy(low_eta.with_updates(kappa=target - 1e-4), 4248.7)
    assert matured.activate_social_objective
    assert matured.kappa_target is None


def test_strategy_without_ac_regime(base):
    report = second_best.recommend_strategy(base.with_updates(f_a=600_000.0), 480.0)
    assert report.n_a1 is None
    assert not report.activate_commuter_objective
    assert len(report.steps) == 1
    assert not math.isnan(report.eta)


def test_strategy_without_fixed_cost_matches_mc(base):
    report = second_best.recommend_strategy(base.with_updates(f_a=0.0), 480.0)
    assert report.n_a1 == pytest.approx(0.0, abs=1e-9)
    assert report.activate_commuter_objective
    assert report.activate_social_objective
    assert len(report.steps) == 2
