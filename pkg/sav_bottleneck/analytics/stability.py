from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.optimize import bisect
from scipy.special import expit

from sav_bottleneck.analytics.fare_equilibria import solve_ac
from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.errors import NoSuchEquilibriumError
from sav_bottleneck.core.params import ParamsLike, derive, raw
from sav_bottleneck.schemas.equilibria import (
    FareRule,
    Protocol,
    RestPointStability,
    StabilityReport,
    Trajectory,
)

logger = logging.getLogger(__name__)

PROTOCOLS: Tuple[Protocol, ...] = ("Smith", "BestResponse", "BNN")

AVERAGE_COST = FareRule(kind="average_cost")


def fixed_fare(fare: float) -> FareRule:
    return FareRule(kind="fixed", fare=fare)


def rule_fare(params: ParamsLike, rule: FareRule, n_a):
    p = raw(params)
    n_a = np.asarray(n_a, dtype=float)
    if rule.kind == "fixed":
        fare = p.m if rule.fare is None else rule.fare
        return np.full_like(n_a, fare)
    with np.errstate(divide="ignore"):
        return np.where(n_a > 0.0, p.m + p.f_a / np.where(n_a > 0.0, n_a, 1.0), np.inf if p.f_a > 0 else p.m)


def mode_costs(params: ParamsLike, rule: FareRule, n_a, cfg: Optional[Settings] = None):
    """Both modes' costs along the day-to-day state; SAV cost is capped to stay finite."""
    cfg = cfg or default_settings
    p = raw(params)
    a_prime = derive(p).a_prime
    n_a = np.asarray(n_a, dtype=float)
    n_n = p.n_total - n_a
    fare = rule_fare(p, rule, n_a)
    c_n = a_prime * (n_n + p.kappa * n_a) + p.t_f + p.f_n
    c_a = a_prime * (p.theta * n_n + p.kappa * n_a) + p.theta * p.t_f + fare
    return c_n, np.minimum(c_a, cfg.sav_cost_cap), fare


def cost_gap_path(params: ParamsLike, rule: FareRule, n_a, cfg: Optional[Settings] = None):
    """c_n - c_a, snapped to exactly zero within the knife-edge tolerance."""
    cfg = cfg or default_settings
    c_n, c_a, _ = mode_costs(params, rule, n_a, cfg)
    gap = c_n - c_a
    return np.where(np.abs(gap) <= cfg.threshold_tol * np.maximum(1.0, np.abs(c_n)), 0.0, gap)


def _smoothed_switch(x, temperature: float):
    return np.maximum(0.0, 2.0 * expit(x / temperature) - 1.0)


def velocity(
    params: ParamsLike,
    rule: FareRule,
    n_a,
    protocol: Protocol = "Smith",
    cfg: Optional[Settings] = None,
):
    """Day-to-day rate of change of SAV ridership.

    Accepts a scalar or an array of states and returns the same shape.
    """
    cfg = cfg or default_settings
    p = raw(params)
    n = np.clip(np.asarray(n_a, dtype=float), 0.0, p.n_total)
    g = cost_gap_path(p, rule, n, cfg)
    n_total = p.n_total

    if protocol == "Smith":
        v = (n_total - n) * np.maximum(0.0, g) - n * np.maximum(0.0, -g)
    elif protocol == "BNN":
        v = np.where(g > 0.0, g * (n_total - n) ** 2, g * n * n) / n_total
    elif protocol == "BestResponse":
        temp = cfg.logit_temperature
        v = (n_total - n) * _smoothed_switch(g, temp) - n * _smoothed_switch(-g, temp)
    else:
        raise ValueError(f"Unknown protocol: {protocol}")

    if rule.kind == "average_cost" and p.f_a > 0.0:
        v = np.where(n <= 0.0, 0.0, v)
    return float(v) if np.ndim(v) == 0 else v


def rest_points(params: ParamsLike, rule: FareRule, cfg: Optional[Settings] = None) -> List[Tuple[str, float, bool]]:
    """(label, n_a, degenerate) for every state where the velocity vanishes."""
    cfg = cfg or default_settings
    p = raw(params)
    if rule.kind == "average_cost":
        points = []
        # without a fixed cost the empty-SAV state only rests when SAVs are dearer there
        if p.f_a > 0.0 or float(cost_gap_path(p, rule, 0.0, cfg)) <= 0.0:
            points.append(("AC0", 0.0, False))
        for eq in solve_ac(p, cfg.threshold_tol):
            if eq.regime in ("AC1", "AC2") and eq.split.n_a > 0.0:
                points.append((eq.regime, eq.split.n_a, eq.degenerate))
        return points

    d = derive(p)
    fare = p.m if rule.fare is None else rule.fare
    n_star = p.n_total - (d.b_coef + fare - p.m) / d.a_coef
    if n_star <= 0.0:
        return [("all_nv", 0.0, False)]
    if n_star >= p.n_total:
        return [("all_sav", p.n_total, False)]
    return [("interior", n_star, False)]


def _nearest(points: List[Tuple[str, float, bool]], n_a: float, tol: float) -> Tuple[Optional[str], Optional[float]]:
    best = min(points, key=lambda rp: abs(rp[1] - n_a))
    if abs(best[1] - n_a) <= tol:
        return best[0], best[1]
    return None, None


def _heun(rhs, n0: float, n_total: float, horizon: float, cfg: Settings):
    eps = cfg.stability_eps * n_total
    max_jump = cfg.stability_max_step_frac * n_total
    err_tol = 1e-6 * n_total

    v0 = rhs(n0)
    dt = min(horizon * 1e-3, max_jump / max(abs(v0), eps))
    dt_min = 1e-15 * max(1.0, horizon)
    dt_max = horizon / (4.0 * cfg.stability_dwell)
    times, states = [0.0], [n0]
    u, n = 0.0, n0
    dwell = 1 if abs(v0) < eps else 0

    steps = 0
    while u < horizon and steps < cfg.stability_max_steps:
        if dwell >= cfg.stability_dwell:
            return times, states, True
        steps += 1
        dt = min(dt, horizon - u)
        pred = min(max(n + dt * v0, 0.0), n_total)
        v1 = rhs(pred)
        new = min(max(n + 0.5 * dt * (v0 + v1), 0.0), n_total)
        # local slope of V; dt * |slope| <= 1 keeps the explicit step stable
        stiff = pred != n and dt * abs((v1 - v0) / (pred - n)) > 1.0
        if (stiff or abs(new - n) > max_jump or abs(new - pred) > err_tol) and dt > dt_min:
            dt *= 0.5
            continue
        u += dt
        n = new
        times.append(u)
        states.append(n)
        v0 = rhs(n)
        dwell = dwell + 1 if abs(v0) < eps else 0
        dt = min(dt * 1.5, dt_max)
    return times, states, dwell >= cfg.stability_dwell


def _lsoda(rhs, n0: float, n_total: float, horizon: float, cfg: Settings):
    eps = cfg.stability_eps * n_total
    if abs(rhs(n0)) < eps:
        return [0.0], [n0], True

    def at_rest(u, y):
        return abs(rhs(min(max(y[0], 0.0), n_total))) - eps

    at_rest.terminal = True
    at_rest.direction = -1

    sol = solve_ivp(
        lambda u, y: [rhs(min(max(y[0], 0.0), n_total))],
        (0.0, horizon),
        [n0],
        method="LSODA",
        events=at_rest,
        rtol=1e-8,
        atol=cfg.stability_eps * n_total,
    )
    states = [min(max(float(y), 0.0), n_total) for y in sol.y[0]]
    return [float(u) for u in sol.t], states, sol.status == 1


def integrate(
    params: ParamsLike,
    rule: FareRule,
    n_a0: float,
    horizon: Optional[float] = None,
    protocol: Protocol = "Smith",
    cfg: Optional[Settings] = None,
) -> Trajectory:
    """Integrate dN_a/du = V(N_a) from n_a0; an unconverged run simply has no label."""
    cfg = cfg or default_settings
    p = raw(params)
    if not 0.0 <= n_a0 <= p.n_total:
        raise ValueError(f"Initial SAV ridership {n_a0} outside [0, {p.n_total}]")
    horizon = cfg.stability_horizon if horizon is None else horizon

    def rhs(n: float) -> float:
        return velocity(p, rule, n, protocol, cfg)

    runner = _lsoda if cfg.integrator == "lsoda" else _heun
    times, states, converged = runner(rhs, float(n_a0), p.n_total, horizon, cfg)

    label, target = (None, None)
    if converged:
        label, target = _nearest(rest_points(p, rule, cfg), states[-1], 1e-4 * p.n_total)
    logger.debug("%s trajectory from %s: converged=%s label=%s", protocol, n_a0, converged, label)
    return Trajectory(
        protocol=protocol,
        times=times,
        states=states,
        converged=converged,
        converged_to=target,
        converged_label=label,
    )


def _perturbation(p, points: List[Tuple[str, float, bool]], cfg: Settings) -> float:
    delta = max(1e-3 * p.n_total, 10.0 * cfg.stability_eps * p.n_total)
    values = sorted(v for _, v, _ in points)
    spacing = [b - a for a, b in zip(values, values[1:]) if b - a > 0.0]
    if spacing:
        delta = min(delta, 0.25 * min(spacing))
    return delta


def classify(
    params: ParamsLike,
    rule: FareRule = AVERAGE_COST,
    protocol: Protocol = "Smith",
    cfg: Optional[Settings] = None,
) -> StabilityReport:
    """Label each rest point by integrating from both sides of it."""
    cfg = cfg or default_settings
    p = raw(params)
    points = rest_points(p, rule, cfg)
    delta = _perturbation(p, points, cfg)

    results: List[RestPointStability] = []
    for label, n_star, degenerate in points:
        if degenerate:
            results.append(RestPointStability(label=label, n_a=n_star, status="unstable", degenerate=True))
            continue
        starts = [s for s in (n_star - delta, n_star + delta) if 0.0 <= s <= p.n_total]
        returned = all(integrate(p, rule, s, protocol=protocol, cfg=cfg).converged_label == label for s in starts)
        results.append(RestPointStability(label=label, n_a=n_star, status="stable" if returned else "unstable"))
    return StabilityReport(protocol=protocol, fare_rule=rule, rest_points=results)


def locate_basin_threshold(
    params: ParamsLike,
    protocol: Protocol = "Smith",
    cfg: Optional[Settings] = None,
) -> float:
    """Initial ridership separating the AC0 and AC2 basins under average-cost fares."""
    cfg = cfg or default_settings
    p = raw(params)
    eqs = {e.regime: e for e in solve_ac(p, cfg.threshold_tol)}
    if "AC1" not in eqs or "AC2" not in eqs or eqs["AC1"].split.n_a <= 0.0:
        raise NoSuchEquilibriumError("Basin threshold needs two distinct positive AC equilibria")
    n1, n2 = eqs["AC1"].split.n_a, eqs["AC2"].split.n_a

    def outcome(n0: float) -> float:
        label = integrate(p, AVERAGE_COST, n0, protocol=protocol, cfg=cfg).converged_label
        if label == "AC2":
            return 1.0
        if label == "AC0":
            return -1.0
        return 0.0

    return float(bisect(outcome, 0.5 * n1, 0.5 * (n1 + n2), xtol=1e-4 * n1))


def trajectory_frame(params: ParamsLike, rule: FareRule, traj: Trajectory, cfg: Optional[Settings] = None) -> pd.DataFrame:
    """Trajectory table with columns u, n_a, c_n, c_a, fare, velocity."""
    cfg = cfg or default_settings
    states = np.asarray(traj.states, dtype=float)
    c_n, c_a, fare = mode_costs(params, rule, states, cfg)
    v = velocity(params, rule, states, traj.protocol, cfg)
    return pd.DataFrame(
        {
            "u": traj.times,
            "n_a": states,
            "c_n": c_n,
            "c_a": c_a,
            "fare": fare,
            "velocity": np.atleast_1d(v),
        }
    )


__all__ = [
    "PROTOCOLS",
    "AVERAGE_COST",
    "fixed_fare",
    "rule_fare",
    "mode_costs",
    "cost_gap_path",
    "velocity",
    "rest_points",
    "integrate",
    "classify",
    "locate_basin_threshold",
    "trajectory_frame",
]
