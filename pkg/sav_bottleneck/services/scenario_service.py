from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from sav_bottleneck.analytics import departure_time, fare_equilibria, first_best, second_best, stability
from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.errors import ConfigError, NoSuchEquilibriumError, SavBottleneckError
from sav_bottleneck.core.params import ModelParams, derive, validate
from sav_bottleneck.schemas.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

Outputs = Tuple[Dict[str, pd.DataFrame], Dict[str, object]]


def sweep(
    values: np.ndarray,
    point: Callable[[float], Dict[str, object]],
    threads: int = 1,
    key: str = "x",
) -> pd.DataFrame:
    """Evaluate `point` at every sweep value; rows come back sorted by the coordinate."""
    rows = Parallel(n_jobs=threads, prefer="threads")(delayed(point)(float(v)) for v in values)
    return pd.DataFrame(rows).sort_values(key, kind="mergesort").reset_index(drop=True)


class ScenarioService:
    """Runs one subcommand for a scenario and returns (tables, summary)."""

    def __init__(self, cfg: Optional[Settings] = None) -> None:
        self.cfg = cfg or default_settings

    def _params(self, scenario: ScenarioConfig) -> ModelParams:
        return validate(scenario.params, self.cfg.threshold_tol).params

    def equilibrium(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        table = fare_equilibria.regime_frame(p)
        table = table[table["regime"].isin(scenario.regimes)].reset_index(drop=True)
        ordering = fare_equilibria.ordering_check(p, self.cfg.threshold_tol)
        d = derive(p)
        summary: Dict[str, object] = {
            "a_coef": d.a_coef,
            "b_coef": d.b_coef,
            "eta": d.eta,
            "discriminant": d.discriminant,
            "n_min": d.n_min,
            "ordering_passed": ordering.passed,
        }
        for row in table.itertuples():
            summary[f"n_a_{row.regime}"] = row.n_a
            summary[f"cost_{row.regime}"] = row.cost
        return {"equilibria": table}, summary

    def profile(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        eq = fare_equilibria.solve_mc(p, self.cfg.threshold_tol)
        prof = departure_time.build_profile(p, eq.split)
        report = departure_time.verify_profile(p, prof, eq.fare, cfg=self.cfg)
        table = departure_time.profile_frame(p, prof, eq.fare, cfg=self.cfg)
        summary = {
            "regime": eq.regime,
            "n_a": eq.split.n_a,
            "t_n_minus": prof.t_n_minus,
            "t_n_plus": prof.t_n_plus,
            "t_a_minus": prof.t_a_minus,
            "t_a_plus": prof.t_a_plus,
            **{f"verify_{k}": v for k, v in report.model_dump().items()},
        }
        return {"profile": table}, summary

    def stability(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        rule = stability.AVERAGE_COST
        n_a0 = scenario.n_a0
        if n_a0 is None:
            n_a0 = fare_equilibria.solve_monopoly(p).split.n_a
        traj = stability.integrate(p, rule, n_a0, scenario.horizon, scenario.protocol, self.cfg)
        rows: List[Dict[str, object]] = []
        for protocol in stability.PROTOCOLS:
            report = stability.classify(p, rule, protocol, self.cfg)
            rows += [
                {
                    "protocol": protocol,
                    "label": rp.label,
                    "n_a": rp.n_a,
                    "status": rp.status,
                    "degenerate": rp.degenerate,
                }
                for rp in report.rest_points
            ]
        summary: Dict[str, object] = {
            "protocol": scenario.protocol,
            "n_a0": n_a0,
            "converged": traj.converged,
            "converged_to": traj.converged_to,
            "converged_label": traj.converged_label,
        }
        try:
            summary["basin_threshold"] = stability.locate_basin_threshold(p, scenario.protocol, self.cfg)
        except NoSuchEquilibriumError as exc:
            summary["basin_threshold"] = None
            logger.info("no basin threshold: %s", exc)
        tables = {
            "trajectory": stability.trajectory_frame(p, rule, traj, self.cfg),
            "classification": pd.DataFrame(rows),
        }
        return tables, summary

    def firstbest(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        cfg = self.cfg
        if scenario.lp_cells is not None:
            cfg = cfg.model_copy(update={"lp_cells": scenario.lp_cells})
        solution = first_best.solve_first_best(p, cfg.threshold_tol)
        discrete = first_best.solve_first_best_lp(p, cfg=cfg)
        agreement = first_best.lp_agreement(p, discrete, cfg)
        pareto = first_best.pareto_check(p, cfg.threshold_tol)
        financing = first_best.self_financing_check(p)

        cells = pd.DataFrame(
            {
                "t": discrete.t_mid,
                "n_n": discrete.n_n,
                "n_a": discrete.n_a,
                "tau_lp": discrete.tau,
                "tau_closed_form": first_best.toll(p, solution, np.asarray(discrete.t_mid)),
            }
        )
        summary: Dict[str, object] = {
            "case_label": solution.case_label,
            "n_a": solution.split.n_a,
            "cost": solution.cost,
            "t_n_minus": solution.t_n_minus,
            "t_n_plus": solution.t_n_plus,
            "t_a_minus": solution.t_a_minus,
            "t_a_plus": solution.t_a_plus,
            "toll_peak": solution.toll_peak,
            "pareto_improvement": pareto.pareto_improvement,
            "pareto_passed": pareto.passed,
            "toll_revenue": financing.lhs,
            "toll_revenue_trapezoid": financing.rhs,
            "social_cost": financing.social_cost,
            **{f"lp_{k}": v for k, v in agreement.items()},
        }
        return {"toll": first_best.toll_schedule_frame(p, solution), "lp_cells": cells}, summary

    def secondbest(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        sb = second_best.solve_second_best(p)
        grid = np.linspace(0.0, p.n_total, scenario.n_a_steps)
        curve = pd.DataFrame(
            {
                "n_a": grid,
                "sc": [second_best.sc_of_split(p, n) for n in grid],
                "dsc_dn_a": [second_best.sc_derivative(p, n) for n in grid],
            }
        )
        terms = second_best.sc_derivative_terms(p, sb.n_a_sb)
        ordering = second_best.second_best_ordering(p)
        summary = {
            **sb.model_dump(),
            **{f"term_{k}": v for k, v in terms.model_dump().items()},
            **{f"ordering_{k}": v for k, v in ordering.items()},
        }
        return {"sc_curve": curve}, summary

    def welfare(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        table = second_best.regime_social_costs(p, self.cfg.threshold_tol)
        regimes = pd.DataFrame(
            [
                {"regime": "MC", "sc": table.sc_mc, "printed_sc": table.sc_mc},
                {"regime": "AC0", "sc": table.sc_ac0, "printed_sc": table.printed_sc_ac0},
                {"regime": "AC2", "sc": table.sc_ac2, "printed_sc": table.sc_ac2},
                {"regime": "Monopoly", "sc": table.sc_monopoly, "printed_sc": table.printed_sc_monopoly},
            ]
        )
        thresholds = pd.DataFrame(
            [{"name": k, "value": v.value, "reason": v.reason} for k, v in table.thresholds.items()]
        )
        etas = np.linspace(scenario.eta_min, scenario.eta_max, scenario.eta_steps)
        contour = second_best.welfare_grid(p, etas, scenario.n_a_steps)
        summary = {
            "ranking": table.ranking,
            "expected_ranking": table.expected_ranking,
            "chain_holds": table.chain_holds,
            "eta_regime": table.eta_regime,
            "fixed_cost_regime": table.fixed_cost_regime,
            **{f"threshold_{k}": v.value for k, v in table.thresholds.items()},
        }
        return {"regimes": regimes, "thresholds": thresholds, "contour": contour}, summary

    def _sweep_values(self, scenario: ScenarioConfig) -> np.ndarray:
        centre = getattr(scenario.params, scenario.sweep_axis)
        lo = scenario.sweep_min if scenario.sweep_min is not None else 0.5 * centre
        hi = scenario.sweep_max if scenario.sweep_max is not None else 1.5 * centre
        values = np.linspace(lo, hi, scenario.sweep_steps)
        for end in (values[0], values[-1]):
            try:
                validate(scenario.params.with_updates(**{scenario.sweep_axis: float(end)}))
            except SavBottleneckError as exc:
                raise ConfigError(f"Sweep endpoint {scenario.sweep_axis}={end} invalid: {exc}") from exc
        return values

    def paradox(self, scenario: ScenarioConfig) -> Outputs:
        base = self._params(scenario)
        axis = scenario.sweep_axis
        cfg = self.cfg

        def point(value: float) -> Dict[str, object]:
            p = base.with_updates(**{axis: value})
            row: Dict[str, object] = {
                axis: value,
                "c_mc": fare_equilibria.solve_mc(p).cost,
                "c_monopoly": fare_equilibria.solve_monopoly(p).cost,
                "dc_dmu_mc": fare_equilibria.capacity_sensitivity(p, "MC", cfg).dc_dmu,
                "dc_dmu_monopoly": fare_equilibria.capacity_sensitivity(p, "Monopoly", cfg).dc_dmu,
            }
            try:
                rep = fare_equilibria.capacity_sensitivity(p, "AC2", cfg)
                row.update(
                    c_ac2=fare_equilibria.regime_cost(p, "AC2"),
                    dc_dmu_ac2=rep.dc_dmu,
                    dc_dmu_ac2_fd=rep.dc_dmu_fd,
                    paradox_lhs=rep.paradox_lhs,
                    paradox=rep.paradox,
                    signs_agree=(rep.dc_dmu > 0) == (rep.dc_dmu_fd > 0),
                )
            except NoSuchEquilibriumError:
                row.update(
                    c_ac2=math.nan,
                    dc_dmu_ac2=math.nan,
                    dc_dmu_ac2_fd=math.nan,
                    paradox_lhs=math.nan,
                    paradox=False,
                    signs_agree=True,
                )
            return row

        table = sweep(self._sweep_values(scenario), point, cfg.sweep_threads, key=axis)
        summary = {
            "sweep_axis": axis,
            "points": len(table),
            "paradox_points": int(table["paradox"].sum()),
            "signs_agree": bool(table["signs_agree"].all()),
            "mc_always_decreasing": bool((table["dc_dmu_mc"] < 0).all()),
            "monopoly_always_decreasing": bool((table["dc_dmu_monopoly"] < 0).all()),
        }
        return {"sweep": table}, summary

    def strategy(self, scenario: ScenarioConfig) -> Outputs:
        p = self._params(scenario)
        current = scenario.current_n_a
        if current is None:
            current = fare_equilibria.solve_monopoly(p).split.n_a
        report = second_best.recommend_strategy(p, current)
        steps = pd.DataFrame({"step": list(range(1, len(report.steps) + 1)), "action": report.steps})
        return {"steps": steps}, report.model_dump()


scenario_service = ScenarioService()


__all__ = ["sweep", "ScenarioService", "scenario_service"]
