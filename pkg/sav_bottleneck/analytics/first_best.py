from __future__ import annotations

import logging
import math
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.integrate import trapezoid
from scipy.optimize import linprog

from sav_bottleneck.analytics.fare_equilibria import solve_mc
from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.errors import GridTooNarrowError, NumericalFailure
from sav_bottleneck.core.params import ParamsLike, derive, raw
from sav_bottleneck.schemas.equilibria import ModeSplit
from sav_bottleneck.schemas.policy import (
    DiscreteSolution,
    FirstBestSolution,
    ParetoReport,
    SelfFinancingReport,
)
from sav_bottleneck.utils.numerics import relative_gap, schedule_cost, schedule_cost_cell_average

logger = logging.getLogger(__name__)


def mixed_case_threshold(params: ParamsLike) -> float:
    """Population above which the queue-free optimum uses both modes."""
    p = raw(params)
    d = derive(p)
    return d.b_coef / ((1.0 - p.kappa) * d.a_prime)


def solve_first_best(params: ParamsLike, tol: Optional[float] = None) -> FirstBestSolution:
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    d = derive(p)
    a_n = d.a_prime * p.n_total
    b = d.b_coef

    if b <= tol:
        # SAV dominates on both capacity and operating cost
        head = p.kappa * a_n
        return FirstBestSolution(
            case_label="sav_only",
            split=ModeSplit(n_n=0.0, n_a=p.n_total),
            cost=head + p.theta * p.t_f + p.m,
            t_n_minus=-head / p.beta,
            t_n_plus=head / p.gamma,
            t_a_minus=-head / p.beta,
            t_a_plus=head / p.gamma,
            mu=p.mu,
            kappa=p.kappa,
            toll_peak=a_n,
        )

    threshold = mixed_case_threshold(p)
    if p.n_total <= threshold:
        return FirstBestSolution(
            case_label="nv_only",
            split=ModeSplit(n_n=p.n_total, n_a=0.0),
            cost=a_n + p.t_f + p.f_n,
            t_n_minus=-a_n / p.beta,
            t_n_plus=a_n / p.gamma,
            mu=p.mu,
            kappa=p.kappa,
            toll_peak=a_n,
        )

    head = p.kappa * a_n + b
    t_n_minus, t_n_plus = -head / p.beta, head / p.gamma
    n_a = p.n_total - threshold
    logger.debug("first best mixed: n_a=%s cost=%s", n_a, head + p.t_f + p.f_n)
    return FirstBestSolution(
        case_label="mixed",
        split=ModeSplit(n_n=threshold, n_a=n_a),
        cost=head + p.t_f + p.f_n,
        t_n_minus=t_n_minus,
        t_n_plus=t_n_plus,
        t_a_minus=t_n_minus + b / (p.beta * (1.0 - p.kappa)),
        t_a_plus=t_n_plus - b / (p.gamma * (1.0 - p.kappa)),
        mu=p.mu,
        kappa=p.kappa,
        toll_switch_level=b / (1.0 - p.kappa),
        toll_peak=a_n,
    )


def _regions(solution: FirstBestSolution, t: np.ndarray):
    in_rush = (t >= solution.t_n_minus) & (t <= solution.t_n_plus)
    if solution.t_a_minus is None:
        sav = np.zeros_like(t, dtype=bool)
    else:
        sav = (t >= solution.t_a_minus) & (t <= solution.t_a_plus)
    return in_rush & ~sav, sav


def toll(params: ParamsLike, solution: FirstBestSolution, t):
    """NV toll at arrival time t; SAVs pay kappa times this."""
    p = raw(params)
    t = np.asarray(t, dtype=float)
    s = schedule_cost(t, p.beta, p.gamma)
    nv, sav = _regions(solution, t)
    nv_branch = solution.cost - s - p.t_f - p.f_n
    sav_branch = (solution.cost - s - p.theta * p.t_f - p.m) / p.kappa
    tau = np.where(sav, sav_branch, np.where(nv, nv_branch, 0.0))
    tau = np.maximum(tau, 0.0)
    return float(tau) if tau.ndim == 0 else tau


def first_best_flows(solution: FirstBestSolution, t):
    """Arrival rates (n_n, n_a): mu on the NV shoulders, mu/kappa in the SAV window."""
    t = np.asarray(t, dtype=float)
    nv, sav = _regions(solution, t)
    return np.where(nv, solution.mu, 0.0), np.where(sav, solution.mu / solution.kappa, 0.0)


def toll_integral(params: ParamsLike, solution: FirstBestSolution) -> float:
    """Exact integral of the piecewise-linear toll over the rush hour."""
    knots = np.array(solution.knots())
    return float(trapezoid(toll(params, solution, knots), knots))


def first_best_social_cost(params: ParamsLike, solution: Optional[FirstBestSolution] = None) -> float:
    """Resource cost of the queue-free optimum: commuter cost less toll revenue, plus F_a."""
    p = raw(params)
    solution = solution or solve_first_best(p)
    return p.n_total * solution.cost - p.mu * toll_integral(p, solution) + p.f_a


def toll_schedule_frame(params: ParamsLike, solution: FirstBestSolution, points: int = 2001) -> pd.DataFrame:
    """Toll table with columns t, tau_nv, tau_sav, mode_flowing."""
    p = raw(params)
    width = solution.t_n_plus - solution.t_n_minus
    t = np.linspace(solution.t_n_minus - 0.1 * width, solution.t_n_plus + 0.1 * width, points)
    tau = toll(p, solution, t)
    nv, sav = _regions(solution, t)
    mode = np.where(sav, "sav", np.where(nv, "nv", "none"))
    return pd.DataFrame({"t": t, "tau_nv": tau, "tau_sav": p.kappa * tau, "mode_flowing": mode})


def default_time_grid(params: ParamsLike, cells: Optional[int] = None, margin: Optional[float] = None) -> np.ndarray:
    """Uniform cell edges covering the analytic rush hour widened by `margin`."""
    cells = cells or default_settings.lp_cells
    margin = margin or default_settings.lp_margin
    sol = solve_first_best(params)
    centre = 0.5 * (sol.t_n_minus + sol.t_n_plus)
    half = 0.5 * margin * (sol.t_n_plus - sol.t_n_minus)
    return np.linspace(centre - half, centre + half, cells + 1)


def _cell_costs(p, edges: np.ndarray):
    left, right = edges[:-1], edges[1:]
    s_avg = schedule_cost_cell_average(left, right, p.beta, p.gamma)
    return right - left, 0.5 * (left + right), p.t_f + p.f_n + s_avg, p.theta * p.t_f + p.m + s_avg


def _greedy_fill(p, widths, cost_n, cost_a):
    """Continuous-knapsack fill: raise the common cost level until N commuters fit.

    Each cell offers NV capacity when the level passes cost_n, SAV capacity when it
    passes cost_a, and swaps NV for SAV once (c - cost_a)/kappa beats c - cost_n.
    """
    kappa, mu = p.kappa, p.mu
    cells = np.arange(len(widths))
    nv_first = cost_a >= cost_n
    swap_level = (cost_a - kappa * cost_n) / (1.0 - kappa)

    level = np.concatenate([cost_n[nv_first], swap_level[nv_first], cost_a[~nv_first]])
    cell = np.concatenate([cells[nv_first], cells[nv_first], cells[~nv_first]])
    kind = np.concatenate(
        [
            np.zeros(nv_first.sum(), dtype=int),
            np.full(nv_first.sum(), 2, dtype=int),
            np.ones((~nv_first).sum(), dtype=int),
        ]
    )
    mass = np.concatenate(
        [
            mu * widths[nv_first],
            mu * widths[nv_first] * (1.0 / kappa - 1.0),
            mu * widths[~nv_first] / kappa,
        ]
    )

    order = np.lexsort((kind, cell, level))
    level, cell, kind, mass = level[order], cell[order], kind[order], mass[order]
    cumulative = np.cumsum(mass)
    k = int(np.searchsorted(cumulative, p.n_total))
    k = min(k, len(level) - 1)

    x_n = np.zeros(len(widths))
    x_a = np.zeros(len(widths))
    for j in range(k):
        i = cell[j]
        if kind[j] == 0:
            x_n[i] = mu
        else:
            x_n[i] = 0.0
            x_a[i] = mu / kappa

    remaining = p.n_total - (cumulative[k - 1] if k > 0 else 0.0)
    i, h = cell[k], widths[cell[k]]
    if kind[k] == 0:
        x_n[i] = remaining / h
    elif kind[k] == 1:
        x_a[i] = remaining / h
    else:
        x_a[i] = remaining / ((1.0 - kappa) * h)
        x_n[i] = mu - kappa * x_a[i]

    c_star = float(level[k])
    tau = np.maximum.reduce([np.zeros(len(widths)), c_star - cost_n, (c_star - cost_a) / kappa])
    return x_n, x_a, tau, c_star


def _simplex(p, widths, cost_n, cost_a):
    n = len(widths)
    c = np.concatenate([cost_n, cost_a])
    a_eq = np.ones((1, 2 * n))
    eye = sparse.identity(n, format="csr")
    a_ub = sparse.hstack([eye, p.kappa * eye], format="csr")
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=p.mu * widths,
        A_eq=a_eq,
        b_eq=[p.n_total],
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise NumericalFailure(f"linprog failed: {res.message}")
    y_n, y_a = res.x[:n], res.x[n:]
    tau = np.maximum(-np.asarray(res.ineqlin.marginals), 0.0)
    return y_n / widths, y_a / widths, tau, float(res.eqlin.marginals[0])


def solve_first_best_lp(
    params: ParamsLike,
    time_grid: Optional[np.ndarray] = None,
    cfg: Optional[Settings] = None,
) -> DiscreteSolution:
    """Discretised queue-free optimum on a time grid, with per-cell capacity duals."""
    cfg = cfg or default_settings
    p = raw(params)
    edges = default_time_grid(p, cfg.lp_cells, cfg.lp_margin) if time_grid is None else np.asarray(time_grid, float)
    widths, mids, cost_n, cost_a = _cell_costs(p, edges)

    if float(np.sum(p.mu * widths / p.kappa)) < p.n_total:
        raise GridTooNarrowError(
            "Time grid cannot carry N commuters even at full SAV throughput; widen the grid"
        )

    if cfg.lp_method == "simplex":
        x_n, x_a, tau, c_star = _simplex(p, widths, cost_n, cost_a)
    else:
        x_n, x_a, tau, c_star = _greedy_fill(p, widths, cost_n, cost_a)

    objective = float(np.sum(widths * (x_n * cost_n + x_a * cost_a))) + p.f_a
    return DiscreteSolution(
        method=cfg.lp_method,
        cell_width=float(np.mean(widths)),
        t_mid=mids.tolist(),
        n_n=x_n.tolist(),
        n_a=x_a.tolist(),
        tau=tau.tolist(),
        objective=objective,
        mass_multiplier=c_star,
    )


def lp_agreement(
    params: ParamsLike,
    discrete: Optional[DiscreteSolution] = None,
    cfg: Optional[Settings] = None,
) -> Dict[str, float]:
    """Compare the discretised optimum with the closed form (objective, SAV mass, duals)."""
    cfg = cfg or default_settings
    p = raw(params)
    solution = solve_first_best(p)
    discrete = discrete or solve_first_best_lp(p, cfg=cfg)
    closed = first_best_social_cost(p, solution)

    h = discrete.cell_width
    mids = np.asarray(discrete.t_mid)
    analytic = toll(p, solution, mids)
    knots = np.array(solution.knots())
    far = np.min(np.abs(mids[:, None] - knots[None, :]), axis=1) >= 5.0 * h
    core = far & (analytic >= 0.5 * solution.toll_peak)
    if core.any():
        dual_err = float(np.max(np.abs(np.asarray(discrete.tau)[core] - analytic[core]) / analytic[core]))
    else:
        dual_err = 0.0

    n_a = np.asarray(discrete.n_a)
    n_n = np.asarray(discrete.n_n)
    mixed_cells = int(np.sum((n_a > 0.0) & (n_n > 0.0)))
    return {
        "objective_lp": discrete.objective,
        "objective_closed_form": closed,
        "objective_rel_gap": relative_gap(discrete.objective, closed),
        "n_a_lp": discrete.sav_mass,
        "n_a_closed_form": solution.split.n_a,
        "n_a_gap_cells": abs(discrete.sav_mass - solution.split.n_a) / (p.mu * h / p.kappa),
        "nv_mass_lp": discrete.nv_mass,
        "mixed_cells": float(mixed_cells),
        "dual_max_rel_error": dual_err,
    }


def pareto_check(params: ParamsLike, tol: Optional[float] = None) -> ParetoReport:
    """Does the first best lower everyone's commuting cost relative to MC pricing?"""
    tol = default_settings.threshold_tol if tol is None else tol
    p = raw(params)
    d = derive(p)
    fb = solve_first_best(p, tol)
    mc = solve_mc(p, tol)
    gap = mc.cost - fb.cost
    scale = tol * max(1.0, abs(mc.cost), abs(fb.cost))

    if mc.boundary != "interior" or fb.case_label == "sav_only":
        return ParetoReport(
            eta=d.eta,
            case_label=fb.case_label,
            cost_first_best=fb.cost,
            cost_mc=mc.cost,
            cost_gap=gap,
            expected_gap=gap,
            pareto_improvement=gap >= -scale,
            passed=True,
            note="MC equilibrium at a corner; closed-form gap not applicable",
        )

    if fb.case_label == "mixed":
        expected = (d.eta - 1.0) * d.b_coef
        identity = d.eta * d.a_coef * (fb.split.n_a - mc.split.n_a)
    else:
        expected = -d.eta * (d.a_coef * p.n_total - d.b_coef)
        identity = None

    matches = abs(gap - expected) <= max(scale, 1e-9 * abs(expected))
    if identity is not None:
        matches = matches and abs(identity - expected) <= max(scale, 1e-9 * abs(expected))
    if d.eta >= 1.0:
        ordered = gap >= -scale
        note = "first best lowers commuting cost (Pareto improvement)"
    else:
        ordered = gap < scale
        note = "first best raises commuting cost although social cost falls"
    return ParetoReport(
        eta=d.eta,
        case_label=fb.case_label,
        cost_first_best=fb.cost,
        cost_mc=mc.cost,
        cost_gap=gap,
        expected_gap=expected,
        identity_rhs=identity,
        pareto_improvement=gap >= -scale,
        passed=matches and ordered,
        note=note,
    )


def self_financing_check(params: ParamsLike, points: int = 10_000, rel_tol: float = 1e-6) -> SelfFinancingReport:
    """Toll revenue mu * integral(tau): exact piecewise sum against a uniform trapezoid rule."""
    p = raw(params)
    solution = solve_first_best(p)
    lhs = p.mu * toll_integral(p, solution)
    grid = np.linspace(solution.t_n_minus, solution.t_n_plus, points)
    rhs = p.mu * float(trapezoid(toll(p, solution, grid), grid))
    gap = relative_gap(lhs, rhs)
    if gap > rel_tol:
        logger.warning("self-financing identity off by %.3g", gap)
    return SelfFinancingReport(
        lhs=lhs,
        rhs=rhs,
        relative_gap=gap,
        passed=gap <= rel_tol and math.isfinite(lhs),
        social_cost=p.n_total * solution.cost - lhs + p.f_a,
    )


__all__ = [
    "mixed_case_threshold",
    "solve_first_best",
    "toll",
    "first_best_flows",
    "toll_integral",
    "first_best_social_cost",
    "toll_schedule_frame",
    "default_time_grid",
    "solve_first_best_lp",
    "lp_agreement",
    "pareto_check",
    "self_financing_check",
]
