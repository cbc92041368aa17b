from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from sav_bottleneck.analytics.departure_time import equilibrium_costs, split_from_sav
from sav_bottleneck.analytics.fare_equilibria import (
    ac_roots,
    inverse_fare,
    profit,
    solve_ac,
    solve_mc,
    solve_monopoly,
)
from sav_bottleneck.core.config import settings as default_settings
from sav_bottleneck.core.errors import ConfigError
from sav_bottleneck.core.params import ParamsLike, derive, raw
from sav_bottleneck.schemas.equilibria import Equilibrium
from sav_bottleneck.schemas.policy import (
    ScDerivativeTerms,
    SecondBestSolution,
    StrategyReport,
    Threshold,
    WelfareTable,
)
from sav_bottleneck.utils.strategy import steps_for_plan, verdict_text

logger = logging.getLogger(__name__)


def sc_of_split(params: ParamsLike, n_a: float) -> float:
    """Social cost when the fare holds SAV ridership at n_a (inverse-demand fare).

    Operator profit includes -F_a even when nobody rides.
    """
    p = raw(params)
    slack = 1e-12 * p.n_total
    if n_a < -slack or n_a > p.n_total + slack:
        raise ValueError(f"n_a={n_a} outside [0, {p.n_total}]")
    n_a = min(max(n_a, 0.0), p.n_total)
    fare = inverse_fare(p, n_a)
    split = split_from_sav(p, n_a)
    costs = equilibrium_costs(p, split, fare)
    return split.n_n * costs.c_n + split.n_a * costs.c_a - profit(p, fare, n_a)


def sc_derivative(params: ParamsLike, n_a: float) -> float:
    p = raw(params)
    d = derive(p)
    return -(1.0 - p.kappa) * d.a_prime * p.n_total - d.a_coef * p.n_total + d.b_coef + 2.0 * d.a_coef * n_a


def sc_derivative_terms(params: ParamsLike, n_a: float) -> ScDerivativeTerms:
    """Split dSC/dn_a into NV, SAV and operator contributions; the fare transfers cancel."""
    p = raw(params)
    d = derive(p)
    n_n = p.n_total - n_a
    margin = inverse_fare(p, n_a) - p.m
    return ScDerivativeTerms(
        nv_term=-(1.0 - p.kappa) * d.a_prime * n_n,
        sav_congestion_term=(p.kappa - p.theta) * d.a_prime * n_a,
        sav_fare_transfer=-d.a_coef * n_a,
        profit_margin_term=-margin,
        profit_fare_transfer=d.a_coef * n_a,
    )


def solve_second_best(params: ParamsLike) -> SecondBestSolution:
    """Fare-only optimum, clamped to [0, N] when the stationary point falls outside."""
    p = raw(params)
    d = derive(p)
    a_n = d.a_coef * p.n_total
    unclamped = (a_n * (1.0 + d.eta) - d.b_coef) / (2.0 * d.a_coef)
    if unclamped <= 0.0:
        n_a, clamped = 0.0, "at_zero"
    elif unclamped >= p.n_total:
        n_a, clamped = p.n_total, "at_N"
    else:
        n_a, clamped = unclamped, "none"
    fare = p.m + ((1.0 - d.eta) * a_n - d.b_coef) / 2.0
    logger.debug("second best n_a=%s (unclamped %s) fare=%s", n_a, unclamped, fare)
    return SecondBestSolution(
        n_a_sb=n_a,
        n_a_unclamped=unclamped,
        fare_sb=fare,
        fare_at_split=inverse_fare(p, n_a),
        clamped=clamped,
        sc_sb=sc_of_split(p, n_a),
    )


def second_best_ordering(params: ParamsLike) -> Dict[str, object]:
    """Second-best ridership against the regulated regimes, and whether the fare undercuts m."""
    p = raw(params)
    d = derive(p)
    sb = solve_second_best(p)
    mc = solve_mc(p)
    mono = solve_monopoly(p)
    ac2 = next((e for e in solve_ac(p) if e.regime == "AC2"), None)
    n_sb, n_mc, n_m = sb.n_a_sb, mc.split.n_a, mono.split.n_a
    if ac2 is not None:
        holds = n_sb > n_mc > ac2.split.n_a >= n_m > 0.0
    else:
        holds = n_sb > n_mc > n_m > 0.0
    return {
        "eta": d.eta,
        "chain_holds": holds,
        "asserted": d.eta >= 1.0,
        "fare_below_m": sb.fare_sb < p.m,
    }


def regime_sc(params: ParamsLike, eq: Equilibrium) -> float:
    """N * c* - pi for a regime equilibrium."""
    return raw(params).n_total * eq.cost - eq.profit


def sc_differences(params: ParamsLike) -> Dict[str, Optional[float]]:
    """Closed-form pairwise social-cost differences between regimes."""
    p = raw(params)
    d = derive(p)
    a, b, eta, n = d.a_coef, d.b_coef, d.eta, p.n_total
    gap = a * n - b
    out: Dict[str, Optional[float]] = {
        "ac0_minus_mc": eta * gap * n,
        "m_minus_mc": gap * ((2.0 * eta - 1.0) * a * n + b) / (4.0 * a),
        "ac2_minus_mc": None,
        "m_minus_ac2": None,
        "m_minus_ac0": -gap * gap / (4.0 * a) - 0.5 * eta * gap * n,
    }
    if d.k_root is not None:
        k = d.k_root
        out["ac2_minus_mc"] = 0.5 * eta * (gap - k) * n - p.f_a
        out["m_minus_ac2"] = k * (2.0 * eta * a * n - k) / (4.0 * a)
    return out


def _eta_regime(eta: float) -> str:
    if eta >= 1.0:
        return "eta>=1"
    if eta >= 0.5:
        return "1>eta>=1/2"
    return "1/2>eta>0"


def critical_thresholds(params: ParamsLike, tol: Optional[float] = None) -> Dict[str, Threshold]:
    """N_min and the critical population and fixed-cost levels between regimes."""
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    d = derive(p)
    a, b, eta, f_a = d.a_coef, d.b_coef, d.eta, p.f_a
    out: Dict[str, Threshold] = {"n_min": Threshold(value=d.n_min)}

    if eta >= 1.0 - tol:
        out["n_c_mc_ac"] = Threshold(reason="eta >= 1: MC is never worse than AC")
    else:
        root = math.sqrt(eta * eta * b * b + 4.0 * eta * (1.0 - eta) * a * f_a)
        n_c = (eta * b + root) / (2.0 * eta * (1.0 - eta) * a)
        # the squared crossing condition also admits roots where K = AN - B - 2F_a/(eta N) < 0
        if eta * n_c * (a * n_c - b) < 2.0 * f_a * (1.0 - tol) or n_c < d.n_min:
            out["n_c_mc_ac"] = Threshold(value=d.n_min, reason="AC2 beats MC wherever AC2 exists")
        else:
            out["n_c_mc_ac"] = Threshold(value=n_c)

    one_minus_2eta = 1.0 - 2.0 * eta
    if abs(one_minus_2eta) <= tol:
        reason = "eta = 1/2 makes the denominator vanish"
        out["n_c_mc_m"] = Threshold(reason=reason)
        out["n_c_ac_m"] = Threshold(reason=reason)
        out["f_a_c"] = Threshold(reason=reason)
    elif one_minus_2eta < 0.0:
        out["n_c_mc_m"] = Threshold(reason="eta > 1/2: MC is never worse than monopoly")
        out["n_c_ac_m"] = Threshold(reason="eta > 1/2: AC2 is never worse than monopoly")
        out["f_a_c"] = Threshold(reason="defined only for eta < 1/2")
    else:
        one_minus_4eta2 = 1.0 - 4.0 * eta * eta
        out["n_c_mc_m"] = Threshold(value=b / (one_minus_2eta * a))
        root = math.sqrt(4.0 * eta * eta * b * b + 4.0 * one_minus_4eta2 * a * f_a)
        out["n_c_ac_m"] = Threshold(value=(b + root) / (one_minus_4eta2 * a))
        out["f_a_c"] = Threshold(value=eta * eta * b * b / (one_minus_2eta * one_minus_2eta * a))
    return out


def expected_ranking(params: ParamsLike, thresholds: Optional[Dict[str, Threshold]] = None) -> List[str]:
    """Regimes from lowest to highest social cost as the eta regime and N dictate."""
    p = raw(params)
    eta = derive(p).eta
    th = thresholds or critical_thresholds(p)
    n = p.n_total

    def below(key: str) -> bool:
        value = th[key].value
        return value is None or n < value

    if eta >= 1.0:
        return ["MC", "AC2", "Monopoly", "AC0"]
    if eta >= 0.5:
        return ["MC", "AC2", "Monopoly", "AC0"] if below("n_c_mc_ac") else ["AC2", "MC", "Monopoly", "AC0"]
    f_a_c = th["f_a_c"].value
    if f_a_c is not None and p.f_a >= f_a_c:
        return ["AC2", "Monopoly", "MC", "AC0"] if below("n_c_ac_m") else ["Monopoly", "AC2", "MC", "AC0"]
    if below("n_c_mc_ac"):
        return ["MC", "AC2", "Monopoly", "AC0"]
    if below("n_c_mc_m"):
        return ["AC2", "MC", "Monopoly", "AC0"]
    if below("n_c_ac_m"):
        return ["AC2", "Monopoly", "MC", "AC0"]
    return ["Monopoly", "AC2", "MC", "AC0"]


def regime_social_costs(params: ParamsLike, tol: Optional[float] = None) -> WelfareTable:
    """Social cost of every regime, the critical thresholds and the ranking checks."""
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    d = derive(p)

    mc = solve_mc(p, tol)
    mono = solve_monopoly(p, tol)
    acs = {e.regime: e for e in solve_ac(p, tol)}
    ac2 = acs.get("AC2")

    values: Dict[str, float] = {
        "MC": regime_sc(p, mc),
        "AC0": regime_sc(p, acs["AC0"]),
        "Monopoly": regime_sc(p, mono),
    }
    if ac2 is not None:
        values["AC2"] = regime_sc(p, ac2)

    thresholds = critical_thresholds(p, tol)
    expected = expected_ranking(p, thresholds)
    ranking = sorted(values, key=lambda k: values[k])

    scale = tol * max(1.0, max(abs(v) for v in values.values()))
    present = [r for r in expected if r in values]
    chain_holds = ac2 is not None and all(
        values[b] - values[a] >= -scale for a, b in zip(present, present[1:])
    )

    fixed_cost_regime = None
    if thresholds["f_a_c"].value is not None:
        fixed_cost_regime = "f_a>=f_a_c" if p.f_a >= thresholds["f_a_c"].value else "f_a<f_a_c"

    a_n = d.a_coef * p.n_total
    printed_monopoly = p.n_total * mono.cost - ((a_n - d.b_coef) ** 2 / (4.0 * d.a_coef) + p.f_a)
    if not chain_holds and ac2 is not None:
        logger.warning("social-cost chain %s not matched by %s", expected, ranking)
    return WelfareTable(
        sc_mc=values["MC"],
        sc_ac0=values["AC0"],
        sc_ac2=values.get("AC2"),
        sc_monopoly=values["Monopoly"],
        printed_sc_ac0=p.n_total * acs["AC0"].cost - p.f_a,
        printed_sc_monopoly=printed_monopoly,
        ranking=ranking,
        expected_ranking=expected,
        chain_holds=chain_holds,
        thresholds=thresholds,
        eta_regime=_eta_regime(d.eta),
        fixed_cost_regime=fixed_cost_regime,
    )


def kappa_for_eta(theta: float, eta: float) -> float:
    return 1.0 - eta * (1.0 - theta)


def welfare_grid(params: ParamsLike, eta_values: Iterable[float], n_a_steps: int = 101) -> pd.DataFrame:
    """SC over an (eta, n_a) grid, varying kappa with theta held fixed."""
    p = raw(params)
    rows = []
    for eta in eta_values:
        kappa = kappa_for_eta(p.theta, eta)
        if not 0.0 < kappa < 1.0:
            raise ConfigError(f"eta={eta} needs kappa={kappa} outside (0, 1) at theta={p.theta}")
        scenario = p.with_updates(kappa=kappa)
        for n_a in np.linspace(0.0, p.n_total, n_a_steps):
            rows.append({"eta": eta, "kappa": kappa, "n_a": n_a, "sc": sc_of_split(scenario, n_a)})
    return pd.DataFrame(rows)


def maturity_kappa(params: ParamsLike) -> float:
    """Largest kappa at which N falls below N_c^{AC=m}, so AC activation lowers social cost."""
    p = raw(params)
    # eta -> 1/2 from below sends N_c^{AC=m} to infinity
    kappa_half = kappa_for_eta(p.theta, 0.5)

    def excess(kappa: float) -> float:
        value = critical_thresholds(p.with_updates(kappa=kappa))["n_c_ac_m"].value
        return math.inf if value is None else value - p.n_total

    lo = kappa_for_eta(p.theta, 0.5 - 1e-9)
    if excess(p.kappa) > 0.0:
        return p.kappa
    if excess(lo) <= 0.0:
        return kappa_half
    return float(brentq(excess, lo, p.kappa, xtol=1e-14))


def recommend_strategy(params: ParamsLike, current_n_a: float) -> StrategyReport:
    """When to switch from an unregulated monopoly to average-cost pricing."""
    p = raw(params)
    d = derive(p)
    roots = ac_roots(p)
    # a zero root is the F_a = 0 case where AC pricing coincides with MC
    if roots is None or roots[0] < 0.0:
        text = verdict_text("no_ac")
        return StrategyReport(
            current_n_a=current_n_a,
            eta=d.eta,
            activate_commuter_objective=False,
            activate_social_objective=False,
            commuter_objective=text,
            social_objective=text,
            steps=steps_for_plan("no_ac"),
        )

    n_a1 = roots[0]
    commuter = current_n_a > n_a1
    if d.eta >= 0.5:
        n_c_ac_m = math.inf
    else:
        n_c_ac_m = critical_thresholds(p)["n_c_ac_m"].value
        n_c_ac_m = math.inf if n_c_ac_m is None else n_c_ac_m
    mature = d.eta >= 1.0 or p.n_total < n_c_ac_m
    social = commuter and mature

    commuter_text = verdict_text("activate" if commuter else "defer_basin")
    if social:
        social_text = verdict_text("activate")
    elif not commuter:
        social_text = verdict_text("defer_basin")
    else:
        social_text = verdict_text("defer_maturation")

    return StrategyReport(
        current_n_a=current_n_a,
        n_a1=n_a1,
        eta=d.eta,
        activate_commuter_objective=commuter,
        activate_social_objective=social,
        commuter_objective=commuter_text,
        social_objective=social_text,
        kappa_target=None if mature else maturity_kappa(p),
        steps=steps_for_plan("two_step" if mature else "three_step"),
    )


__all__ = [
    "sc_of_split",
    "sc_derivative",
    "sc_derivative_terms",
    "solve_second_best",
    "second_best_ordering",
    "regime_sc",
    "sc_differences",
    "critical_thresholds",
    "expected_ranking",
    "regime_social_costs",
    "kappa_for_eta",
    "welfare_grid",
    "maturity_kappa",
    "recommend_strategy",
]
