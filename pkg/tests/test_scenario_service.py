import numpy as np
import pytest

from sav_bottleneck.core.config import settings
from sav_bottleneck.schemas.scenario import ScenarioConfig
from sav_bottleneck.services.scenario_service import ScenarioService, sweep


def test_sweep_sorts_rows_whatever_the_thread_count():
    values = np.array([3.0, 1.0, 2.0])
    serial = sweep(values, lambda v: {"x": v, "y": v * v}, threads=1)
    threaded = sweep(values, lambda v: {"x": v, "y": v * v}, threads=3)
    assert list(serial["x"]) == [1.0, 2.0, 3.0]
    assert serial.equals(threaded)


def test_equilibrium_filters_requested_regimes(base):
    scenario = ScenarioConfig(params=base, regimes=["MC", "Monopoly"])
    tables, summary = ScenarioService().equilibrium(scenario)
    assert list(tables["equilibria"]["regime"]) == ["MC", "Monopoly"]
    assert summary["n_a_Monopoly"] == pytest.approx(480.0)
    assert summary["eta"] == pytest.approx(3.3)


def test_secondbest_summary(base_eta_two_thirds):
    tables, summary = ScenarioService().secondbest(ScenarioConfig(params=base_eta_two_thirds, n_a_steps=21))
    assert len(tables["sc_curve"]) == 21
    assert summary["n_a_sb"] == pytest.approx(813.3333, rel=1e-6)
    assert summary["clamped"] == "none"


def test_firstbest_uses_scenario_cell_count(base):
    service = ScenarioService(settings.model_copy(update={"lp_cells": 5000}))
    tables, summary = service.firstbest(ScenarioConfig(params=base, lp_cells=400))
    assert len(tables["lp_cells"]) == 400
    assert summary["case_label"] == "mixed"
    assert summary["pareto_improvement"] is True


def test_strategy_defaults_to_monopoly_ridership(base):
    _, summary = ScenarioService().strategy(ScenarioConfig(params=base))
    assert summary["current_n_a"] == pytest.approx(480.0)
    assert summary["activate_social_objective"] is True
