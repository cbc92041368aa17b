from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import pandas as pd

from sav_bottleneck.analytics.departure_time import equilibrium_costs, split_from_sav
from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.errors import NoSuchEquilibriumError
from sav_bottleneck.core.params import ParamsLike, derive, near_zero_discriminant, raw
from sav_bottleneck.schemas.equilibria import (
    Boundary,
    Equilibrium,
    OrderingCheck,
    OrderingReport,
    Regime,
    SensitivityReport,
)
from sav_bottleneck.utils.numerics import central_difference

logger = logging.getLogger(__name__)


REGIME_ORDER: List[str] = ["MC", "AC0", "AC1", "AC2", "Monopoly"]


def cost_gap(params: ParamsLike, n_a: float, fare: float) -> float:
    """c_n - c_a at split (N - n_a, n_a); positive means SAV is cheaper."""
    p = raw(params)
    d = derive(p)
    if math.isinf(fare):
        return -math.inf
    return d.a_coef * (p.n_total - n_a) - d.b_coef - (fare - p.m)


def average_cost(params: ParamsLike, n_a: float) -> float:
    p = raw(params)
    if n_a <= 0.0:
        return p.m if p.f_a == 0.0 else math.inf
    return p.m + p.f_a / n_a


def profit(params: ParamsLike, fare: float, n_a: float) -> float:
    p = raw(params)
    if n_a <= 0.0:
        return -p.f_a
    return (fare - p.m) * n_a - p.f_a


def demand(params: ParamsLike, fare: float) -> Tuple[float, Boundary]:
    """SAV ridership at `fare` with both modes in use, clamped to [0, N] and flagged."""
    p = raw(params)
    d = derive(p)
    n_a = p.n_total - (d.b_coef + fare - p.m) / d.a_coef
    if n_a <= 0.0:
        return 0.0, "all_nv"
    if n_a >= p.n_total:
        return p.n_total, "all_sav"
    return n_a, "interior"


def inverse_fare(params: ParamsLike, n_a: float) -> float:
    p = raw(params)
    d = derive(p)
    return p.m + d.a_coef * p.n_total - d.b_coef - d.a_coef * n_a


def profit_at_fare(params: ParamsLike, fare: float) -> float:
    """Operator profit when riders respond to `fare` through the demand curve."""
    n_a, _ = demand(params, fare)
    return profit(params, fare, n_a)


def _equilibrium(
    params: ParamsLike,
    regime: Regime,
    n_a: float,
    fare: float,
    cost: float,
    boundary: Boundary,
    degenerate: bool = False,
) -> Equilibrium:
    split = split_from_sav(params, n_a)
    costs = equilibrium_costs(params, split, fare)
    return Equilibrium(
        regime=regime,
        split=split,
        fare=fare,
        cost=cost,
        cost_n=costs.c_n,
        cost_a=costs.c_a,
        profit=profit(params, fare, n_a),
        boundary=boundary,
        degenerate=degenerate,
    )


def solve_mc(params: ParamsLike, tol: Optional[float] = None) -> Equilibrium:
    """Marginal-cost pricing: fare = m, with the corner splits when B or AN - B vanish."""
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    d = derive(p)
    a_n = d.a_coef * p.n_total

    if d.b_coef <= tol:
        cost = d.a_prime * p.kappa * p.n_total + p.theta * p.t_f + p.m
        return _equilibrium(p, "MC", p.n_total, p.m, cost, "all_sav")
    if a_n - d.b_coef <= tol:
        cost = d.a_prime * p.n_total + p.t_f + p.f_n
        return _equilibrium(p, "MC", 0.0, p.m, cost, "all_nv")

    n_a = p.n_total - d.b_coef / d.a_coef
    cost = (p.kappa * a_n + (1.0 - p.kappa) * d.b_coef) / (1.0 - p.theta) + p.t_f + p.f_n
    logger.debug("MC equilibrium n_a=%s cost=%s", n_a, cost)
    return _equilibrium(p, "MC", n_a, p.m, cost, "interior")


def ac0(params: ParamsLike) -> Equilibrium:
    p = raw(params)
    cost = derive(p).a_prime * p.n_total + p.t_f + p.f_n
    return _equilibrium(p, "AC0", 0.0, math.inf, cost, "all_nv")


def ac_roots(params: ParamsLike, tol: Optional[float] = None) -> Optional[Tuple[float, float]]:
    """The two roots of A n^2 - (AN - B) n + F_a = 0, or None when (AN - B)^2 < 4 A F_a."""
    p = raw(params)
    d = derive(p)
    gap = d.a_coef * p.n_total - d.b_coef
    if near_zero_discriminant(p, tol):
        k = 0.0
    elif d.k_root is None:
        return None
    else:
        k = d.k_root
    return (gap - k) / (2.0 * d.a_coef), (gap + k) / (2.0 * d.a_coef)


def _ac_cost(params: ParamsLike, k: float, sign: float) -> float:
    p = raw(params)
    d = derive(p)
    a_n = d.a_coef * p.n_total
    numer = (1.0 + p.kappa) * a_n + (1.0 - p.kappa) * d.b_coef + sign * (1.0 - p.kappa) * k
    return numer / (2.0 * (1.0 - p.theta)) + p.t_f + p.f_n


def solve_ac(params: ParamsLike, tol: Optional[float] = None) -> List[Equilibrium]:
    """Average-cost pricing: AC0 always, plus AC1/AC2 when (AN - B)^2 >= 4 A F_a."""
    p = raw(params)
    out = [ac0(p)]
    roots = ac_roots(p, tol)
    if roots is None:
        logger.debug("AC pricing: discriminant < 0, AC0 only")
        return out

    n1, n2 = roots
    coincident = near_zero_discriminant(p, tol)
    k = 0.0 if coincident else derive(p).k_root
    lower_ok = 0.0 if p.f_a == 0.0 else 1e-300

    def valid(n: float) -> bool:
        return lower_ok <= n <= p.n_total

    if coincident:
        if valid(n2):
            out.append(
                _equilibrium(p, "AC2", n2, average_cost(p, n2), _ac_cost(p, 0.0, -1.0), "interior", degenerate=True)
            )
        return out

    if valid(n1):
        out.append(_equilibrium(p, "AC1", n1, average_cost(p, n1), _ac_cost(p, k, 1.0), "interior"))
    if valid(n2):
        out.append(_equilibrium(p, "AC2", n2, average_cost(p, n2), _ac_cost(p, k, -1.0), "interior"))
    elif n2 > p.n_total and cost_gap(p, p.n_total, average_cost(p, p.n_total)) >= 0.0:
        fare = average_cost(p, p.n_total)
        cost = equilibrium_costs(p, split_from_sav(p, p.n_total), fare).c_a
        out.append(_equilibrium(p, "AC2", p.n_total, fare, cost, "all_sav"))
    return out


def solve_monopoly(params: ParamsLike, tol: Optional[float] = None) -> Equilibrium:
    """Profit-maximising fare m + (AN - B)/2; the operator exits when it cannot cover F_a."""
    p = raw(params)
    d = derive(p)
    a_n = d.a_coef * p.n_total
    gap = a_n - d.b_coef
    viable = d.discriminant >= 0.0 or near_zero_discriminant(p, tol)

    if not viable or gap <= 0.0:
        exit_eq = ac0(p)
        return exit_eq.model_copy(update={"regime": "Monopoly"})

    n_a = gap / (2.0 * d.a_coef)
    if n_a >= p.n_total:
        n_a = p.n_total
        fare = inverse_fare(p, n_a)
        cost = equilibrium_costs(p, split_from_sav(p, n_a), fare).c_a
        return _equilibrium(p, "Monopoly", n_a, fare, cost, "all_sav")

    fare = p.m + gap / 2.0
    cost = ((1.0 + p.kappa) * a_n + (1.0 - p.kappa) * d.b_coef) / (2.0 * (1.0 - p.theta)) + p.t_f + p.f_n
    logger.debug("monopoly fare=%s n_a=%s", fare, n_a)
    return _equilibrium(p, "Monopoly", n_a, fare, cost, "interior")


def all_equilibria(params: ParamsLike, tol: Optional[float] = None) -> List[Equilibrium]:
    eqs = [solve_mc(params, tol)] + solve_ac(params, tol) + [solve_monopoly(params, tol)]
    return sorted(eqs, key=lambda e: REGIME_ORDER.index(e.regime))


def _find(eqs: List[Equilibrium], regime: str) -> Optional[Equilibrium]:
    return next((e for e in eqs if e.regime == regime), None)


def _check(name: str, slack: float, strict: bool, tol: float) -> OrderingCheck:
    passed = slack > tol if strict else slack >= -tol
    return OrderingCheck(name=name, passed=passed, slack=slack)


def ordering_check(params: ParamsLike, tol: Optional[float] = None) -> OrderingReport:
    """Ridership and cost chains across regimes; failures are reported, not raised."""
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    eqs = all_equilibria(p, tol)
    mc = _find(eqs, "MC")
    mono = _find(eqs, "Monopoly")
    zero = _find(eqs, "AC0")
    ac1 = _find(eqs, "AC1")
    ac2 = _find(eqs, "AC2")
    scale_n = tol * max(1.0, p.n_total)
    scale_c = tol * max(1.0, abs(mc.cost))

    checks: List[OrderingCheck] = []
    coincident = ac2 is not None and ac2.degenerate
    entry_viable = ac2 is not None and not coincident

    if entry_viable and ac1 is not None:
        n_mc, n2, n_m, n1 = mc.split.n_a, ac2.split.n_a, mono.split.n_a, ac1.split.n_a
        checks += [
            _check("n_mc > n_ac2", n_mc - n2, True, scale_n),
            _check("n_ac2 > n_m", n2 - n_m, True, scale_n),
            _check("n_m > n_ac1", n_m - n1, True, scale_n),
            _check("n_ac1 > 0", n1, True, scale_n),
            _check("c_mc < c_ac2", ac2.cost - mc.cost, True, scale_c),
            _check("c_ac2 < c_m", mono.cost - ac2.cost, True, scale_c),
            _check("c_m < c_ac1", ac1.cost - mono.cost, True, scale_c),
            _check("c_ac1 < c_ac0", zero.cost - ac1.cost, True, scale_c),
        ]
    elif coincident:
        n_mc, n2, n_m = mc.split.n_a, ac2.split.n_a, mono.split.n_a
        checks += [
            _check("n_mc > n_ac2", n_mc - n2, True, scale_n),
            _check("n_ac2 = n_m", -abs(n2 - n_m), False, scale_n),
            _check("n_ac2 > 0", n2, True, scale_n),
            _check("c_mc < c_ac2", ac2.cost - mc.cost, True, scale_c),
            _check("c_ac2 = c_m", -abs(mono.cost - ac2.cost), False, scale_c),
            _check("c_m < c_ac0", zero.cost - mono.cost, True, scale_c),
        ]
    else:
        checks += [
            _check("n_mc > n_m", mc.split.n_a - mono.split.n_a, True, scale_n),
            _check("n_m = 0", -abs(mono.split.n_a), False, scale_n),
            _check("c_mc < c_m", mono.cost - mc.cost, True, scale_c),
            _check("c_m = c_ac0", -abs(mono.cost - zero.cost), False, scale_c),
        ]

    report = OrderingReport(entry_viable=entry_viable, coincident=coincident, checks=checks)
    if not report.passed:
        failed = [c.name for c in checks if not c.passed]
        logger.warning("ordering chain broken: %s", failed)
    return report


def regime_cost(params: ParamsLike, regime: Regime) -> float:
    if regime == "MC":
        return solve_mc(params).cost
    if regime == "Monopoly":
        return solve_monopoly(params).cost
    eq = _find(solve_ac(params), regime)
    if eq is None:
        raise NoSuchEquilibriumError(f"No {regime} equilibrium for these parameters")
    return eq.cost


def capacity_sensitivity_general(params: ParamsLike, n_a: float, dn_a_dmu: float) -> float:
    """dc/dmu for any regime given its ridership and the ridership response to capacity."""
    p = raw(params)
    d = derive(p)
    return d.a_prime * (-(p.n_total - (1.0 - p.kappa) * n_a) / p.mu - (1.0 - p.kappa) * dn_a_dmu)


def paradox_lhs(params: ParamsLike) -> float:
    """Left side of the Downs-Thomson condition for AC2; negative means expansion hurts."""
    p = raw(params)
    d = derive(p)
    if d.k_root is None or d.k_root <= 0.0:
        raise NoSuchEquilibriumError("AC2 sensitivity needs a strictly positive discriminant")
    gap = d.a_coef * p.n_total - d.b_coef
    inner = p.n_total / 2.0 + (p.n_total * gap - 2.0 * p.f_a) / (2.0 * d.k_root)
    return p.n_total - (1.0 - p.kappa) * inner


def _analytic_sensitivity(params: ParamsLike, regime: Regime) -> Tuple[float, Optional[float]]:
    p = raw(params)
    d = derive(p)
    if regime == "AC2":
        lhs = paradox_lhs(p)
        return -d.a_prime * lhs / p.mu, lhs
    if regime == "MC":
        eq = solve_mc(p)
        if eq.boundary == "all_nv":
            return -d.a_prime * p.n_total / p.mu, None
        return -d.a_prime * p.kappa * p.n_total / p.mu, None
    if regime == "Monopoly":
        eq = solve_monopoly(p)
        if eq.split.n_a <= 0.0:
            return -d.a_prime * p.n_total / p.mu, None
        if eq.boundary == "all_sav":
            return -d.a_prime * p.kappa * p.n_total / p.mu, None
        return -d.a_prime * (1.0 + p.kappa) * p.n_total / (2.0 * p.mu), None
    raise NoSuchEquilibriumError(f"Capacity sensitivity is defined for MC, Monopoly and AC2, not {regime}")


def capacity_sensitivity(
    params: ParamsLike,
    regime: Regime,
    cfg: Optional[Settings] = None,
) -> SensitivityReport:
    cfg = cfg or default_settings
    p = raw(params)
    if regime == "AC2" and (derive(p).k_root is None or near_zero_discriminant(p, cfg.threshold_tol)):
        raise NoSuchEquilibriumError("AC2 does not exist (the AC roots are missing or coincide)")

    dc_dmu, lhs = _analytic_sensitivity(p, regime)
    h = cfg.fd_rel_step * p.mu
    fd = central_difference(lambda mu: regime_cost(p.with_updates(mu=mu), regime), p.mu, h)
    return SensitivityReport(
        regime=regime,
        dc_dmu=dc_dmu,
        dc_dmu_fd=fd,
        paradox=lhs is not None and lhs < 0.0,
        paradox_lhs=lhs,
    )


def regime_frame(params: ParamsLike) -> pd.DataFrame:
    """One row per regime equilibrium with columns regime, n_a, n_n, fare, cost, profit, boundary."""
    rows = [
        {
            "regime": e.regime,
            "n_a": e.split.n_a,
            "n_n": e.split.n_n,
            "fare": e.fare,
            "cost": e.cost,
            "profit": e.profit,
            "boundary": e.boundary,
            "degenerate": e.degenerate,
        }
        for e in all_equilibria(params)
    ]
    return pd.DataFrame(rows)


__all__ = [
    "REGIME_ORDER",
    "cost_gap",
    "average_cost",
    "profit",
    "demand",
    "inverse_fare",
    "profit_at_fare",
    "solve_mc",
    "ac0",
    "ac_roots",
    "solve_ac",
    "solve_monopoly",
    "all_equilibria",
    "ordering_check",
    "regime_cost",
    "capacity_sensitivity_general",
    "paradox_lhs",
    "capacity_sensitivity",
    "regime_frame",
]
