import numpy as np
import pytest

from sav_bottleneck.analytics import first_best
from sav_bottleneck.core.config import settings
from sav_bottleneck.core.errors import GridTooNarrowError


def test_mixed_first_best(base):
    sol = first_best.solve_first_best(base)
    assert sol.case_label == "mixed"
    assert first_best.mixed_case_threshold(base) == pytest.approx(12.1212, rel=1e-4)
    assert sol.split.n_a == pytest.approx(987.8788, rel=1e-6)
    assert sol.cost == pytest.approx(187.0)
    assert sol.t_n_minus == pytest.approx(-440.0)
    assert sol.t_n_plus == pytest.approx(440.0)
    assert sol.t_a_minus == pytest.approx(-197.5758, rel=1e-5)
    assert sol.t_a_plus == pytest.approx(197.5758, rel=1e-5)
    assert sol.toll_switch_level == pytest.approx(96.9697, rel=1e-5)


def test_toll_profile(base):
    sol = first_best.solve_first_best(base)
    assert first_best.toll(base, sol, 0.0) == pytest.approx(8000.0)
    assert first_best.toll(base, sol, sol.t_a_minus) == pytest.approx(sol.toll_switch_level)
    assert first_best.toll(base, sol, sol.t_n_minus) == pytest.approx(0.0, abs=1e-9)
    assert first_best.toll(base, sol, -1000.0) == 0.0


def test_first_best_flows_fill_capacity(base):
    sol = first_best.solve_first_best(base)
    t = np.linspace(-439.0, 439.0, 301)
    n_n, n_a = first_best.first_best_flows(sol, t)
    np.testing.assert_allclose(n_n + base.kappa * n_a, base.mu)


def test_large_population_first_best(large):
    sol = first_best.solve_first_best(large)
    assert sol.case_label == "mixed"
    assert sol.split.n_a == pytest.approx(6811.94, abs=0.01)
    assert sol.cost == pytest.approx(11544.48, abs=0.01)


def test_nv_only_below_threshold(base):
    sol = first_best.solve_first_best(base.with_updates(n_total=10.0))
    assert sol.case_label == "nv_only"
    assert sol.split.n_a == 0.0
    assert sol.cost == pytest.approx(91.0)


def test_sav_only_when_b_not_positive(base):
    sol = first_best.solve_first_best(base.with_updates(m=4.0))
    assert sol.case_label == "sav_only"
    assert sol.split.n_n == 0.0


def test_lp_matches_closed_form(base):
    agreement = first_best.lp_agreement(base)
    assert agreement["objective_rel_gap"] <= 1e-3
    assert agreement["n_a_gap_cells"] <= 2.0
    assert agreement["dual_max_rel_error"] <= 1e-2
    assert agreement["mixed_cells"] <= 2


def test_greedy_and_simplex_agree(base):
    greedy = first_best.solve_first_best_lp(base, cfg=settings.model_copy(update={"lp_cells": 300}))
    simplex = first_best.solve_first_best_lp(
        base, cfg=settings.model_copy(update={"lp_cells": 300, "lp_method": "simplex"})
    )
    assert simplex.objective == pytest.approx(greedy.objective, rel=1e-6)
    assert simplex.sav_mass == pytest.approx(greedy.sav_mass, rel=1e-4)


def test_lp_rejects_narrow_grid(base):
    with pytest.raises(GridTooNarrowError):
        first_best.solve_first_best_lp(base, time_grid=np.linspace(-1.0, 1.0, 11))


def test_pareto_improvement_when_eta_above_one(base):
    report = first_best.pareto_check(base)
    assert report.passed
    assert report.pareto_improvement
    assert report.cost_gap == pytest.approx(220.8)
    assert report.expected_gap == pytest.approx(220.8)


def test_first_best_raises_commuting_cost_when_eta_below_one(base_eta_two_thirds):
    report = first_best.pareto_check(base_eta_two_thirds)
    assert report.case_label == "mixed"
    assert report.passed
    assert not report.pareto_improvement
    assert report.cost_gap == pytest.approx(-32.0)


def test_self_financing(base):
    report = first_best.self_financing_check(base)
    assert report.passed
    assert report.relative_gap <= 1e-6


def test_toll_schedule_frame(base):
    frame = first_best.toll_schedule_frame(base, first_best.solve_first_best(base), points=501)
    assert list(frame.columns) == ["t", "tau_nv", "tau_sav", "mode_flowing"]
    assert set(frame["mode_flowing"]) == {"none", "nv", "sav"}
    np.testing.assert_allclose(frame["tau_sav"], base.kappa * frame["tau_nv"])


def test_tiny_population_fits_one_cell(base):
    p = base.with_updates(n_total=0.01, f_a=0.0)
    assert first_best.solve_first_best(p).case_label == "nv_only"
    agreement = first_best.lp_agreement(p)
    assert agreement["objective_rel_gap"] <= 1e-3
    assert agreement["n_a_lp"] == pytest.approx(0.0, abs=1e-12)
    one_cell = first_best.solve_first_best_lp(p, time_grid=np.array([-1.0, 1.0]))
    assert one_cell.sav_mass == 0.0
    assert one_cell.nv_mass == pytest.approx(p.n_total)
    assert one_cell.objective == pytest.approx(p.n_total * (p.t_f + p.f_n), rel=0.05)


@pytest.mark.parametrize("gamma", [0.4, 0.8])
def test_single_class_limit_fills_capacity_by_shape(base, gamma):
    p = base.with_updates(kappa=0.999, theta=0.999, m=1.0, gamma=gamma)
    sol = first_best.solve_first_best(p)
    assert sol.case_label == "sav_only"
    assert -sol.t_a_minus / sol.t_a_plus == pytest.approx(p.gamma / p.beta)
    agreement = first_best.lp_agreement(p)
    assert agreement["objective_rel_gap"] <= 1e-3
    assert agreement["nv_mass_lp"] == pytest.approx(0.0, abs=1e-9)
    assert agreement["n_a_lp"] == pytest.approx(p.n_total, rel=1e-9)
