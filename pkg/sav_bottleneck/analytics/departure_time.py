from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
import pandas as pd

from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.errors import ParameterValidationError
from sav_bottleneck.core.params import ParamsLike, derive, raw
from sav_bottleneck.schemas.equilibria import (
    FlowSegment,
    ModeCosts,
    ModeSplit,
    RushHourProfile,
    VerificationReport,
)
from sav_bottleneck.utils.numerics import schedule_cost

logger = logging.getLogger(__name__)


def _check_split(params: ParamsLike, split: ModeSplit) -> None:
    p = raw(params)
    if split.n_n < 0 or split.n_a < 0:
        raise ParameterValidationError(f"Mode split must be non-negative: {split}")
    if not math.isclose(split.total, p.n_total, rel_tol=1e-9, abs_tol=1e-9):
        raise ParameterValidationError(
            f"Mode split {split.total} does not conserve the population {p.n_total}"
        )


def split_from_sav(params: ParamsLike, n_a: float) -> ModeSplit:
    n_total = raw(params).n_total
    return ModeSplit(n_n=n_total - n_a, n_a=n_a)


def equilibrium_costs(params: ParamsLike, split: ModeSplit, fare: float) -> ModeCosts:
    """Departure-time equilibrium costs of each mode for a fixed split and fare."""
    _check_split(params, split)
    p = raw(params)
    a_prime = derive(p).a_prime
    c_n = a_prime * (split.n_n + p.kappa * split.n_a) + p.t_f + p.f_n
    if math.isinf(fare):
        c_a = math.inf
    else:
        c_a = a_prime * (p.theta * split.n_n + p.kappa * split.n_a) + p.theta * p.t_f + fare
    return ModeCosts(c_n=c_n, c_a=c_a, fare=fare)


def build_profile(params: ParamsLike, split: ModeSplit) -> RushHourProfile:
    """No-toll rush hour implied by temporal sorting.

    SAVs arrive in an inner window around t = 0 at rate mu/kappa, NVs on the
    outer shoulders at rate mu. Both windows are divided early:late as
    gamma:beta, which keeps every arriving commuter's cost constant within
    their mode and returns the queue to zero at both ends.
    """
    _check_split(params, split)
    p = raw(params)
    beta, gamma, theta = p.beta, p.gamma, p.theta
    early = gamma / (beta + gamma)
    late = beta / (beta + gamma)

    sav_width = p.kappa * split.n_a / p.mu
    nv_width = split.n_n / p.mu
    e_a, l_a = early * sav_width, late * sav_width
    e_n, l_n = early * nv_width, late * nv_width

    if split.n_a <= 0.0:
        t_minus, t_plus = -e_n, l_n
        return RushHourProfile(
            t_n_minus=t_minus,
            t_n_plus=t_plus,
            knot_times=[t_minus, 0.0, t_plus],
            knot_delays=[0.0, beta * e_n, 0.0],
            segments=[FlowSegment(start=t_minus, end=t_plus, n_n=p.mu, n_a=0.0)],
        )

    if split.n_n <= 0.0:
        t_minus, t_plus = -e_a, l_a
        return RushHourProfile(
            t_n_minus=t_minus,
            t_n_plus=t_plus,
            t_a_minus=t_minus,
            t_a_plus=t_plus,
            knot_times=[t_minus, 0.0, t_plus],
            knot_delays=[0.0, beta * e_a / theta, 0.0],
            segments=[FlowSegment(start=t_minus, end=t_plus, n_n=0.0, n_a=p.mu / p.kappa)],
        )

    t_a_minus, t_a_plus = -e_a, l_a
    t_n_minus, t_n_plus = t_a_minus - e_n, t_a_plus + l_n
    q_a_minus = beta * e_n
    q_peak = q_a_minus + beta * e_a / theta
    q_a_plus = gamma * l_n

    return RushHourProfile(
        t_n_minus=t_n_minus,
        t_n_plus=t_n_plus,
        t_a_minus=t_a_minus,
        t_a_plus=t_a_plus,
        knot_times=[t_n_minus, t_a_minus, 0.0, t_a_plus, t_n_plus],
        knot_delays=[0.0, q_a_minus, q_peak, q_a_plus, 0.0],
        segments=[
            FlowSegment(start=t_n_minus, end=t_a_minus, n_n=p.mu, n_a=0.0),
            FlowSegment(start=t_a_minus, end=t_a_plus, n_n=0.0, n_a=p.mu / p.kappa),
            FlowSegment(start=t_a_plus, end=t_n_plus, n_n=p.mu, n_a=0.0),
        ],
    )


def _verification_grid(profile: RushHourProfile, points: int, span: float, grid_step: Optional[float]):
    width = profile.t_n_plus - profile.t_n_minus
    centre = 0.5 * (profile.t_n_plus + profile.t_n_minus)
    half = 0.5 * span * max(width, 1e-12)
    if grid_step is not None:
        count = max(3, int(math.ceil(2.0 * half / grid_step)) + 1)
        return np.linspace(centre - half, centre + half, count)
    return np.linspace(centre - half, centre + half, points)


def cost_paths(params: ParamsLike, profile: RushHourProfile, fare: float, t: np.ndarray):
    """Cost of arriving at each t by NV and by SAV, given the queue in `profile`."""
    p = raw(params)
    q = profile.queue_delay(t)
    s = schedule_cost(t, p.beta, p.gamma)
    c_n = q + s + p.t_f + p.f_n
    c_a = p.theta * (q + p.t_f) + s + fare
    return q, c_n, c_a


def verify_profile(
    params: ParamsLike,
    profile: RushHourProfile,
    fare: float,
    grid_step: Optional[float] = None,
    split: Optional[ModeSplit] = None,
    cfg: Optional[Settings] = None,
) -> VerificationReport:
    """Check the equilibrium conditions of a profile on a uniform time grid.

    Failures are reported through `passed`, never raised.
    """
    cfg = cfg or default_settings
    p = raw(params)
    split = split or profile.masses()
    target = equilibrium_costs(p, split, fare)

    t = _verification_grid(profile, cfg.profile_grid_points, cfg.profile_grid_span, grid_step)
    q, c_n, c_a = cost_paths(p, profile, fare, t)

    finite = [abs(v) for v in (target.c_n, target.c_a) if math.isfinite(v)]
    tol = cfg.profile_rel_tol * max([1.0] + finite)

    has_sav = profile.t_a_minus is not None and split.n_a > 0.0
    has_nv = split.n_n > 0.0

    if has_sav:
        sav_window = (t >= profile.t_a_minus) & (t <= profile.t_a_plus)
        sav_inner = (t > profile.t_a_minus) & (t < profile.t_a_plus)
    else:
        sav_window = np.zeros_like(t, dtype=bool)
        sav_inner = sav_window
    nv_window = (t >= profile.t_n_minus) & (t <= profile.t_n_plus) & ~sav_inner

    nv_res = float(np.max(np.abs(c_n[nv_window] - target.c_n))) if has_nv and nv_window.any() else 0.0
    sav_res = float(np.max(np.abs(c_a[sav_window] - target.c_a))) if has_sav and sav_window.any() else 0.0

    nv_outside = ~nv_window if has_nv else np.ones_like(t, dtype=bool)
    nv_slack = float(np.min(c_n[nv_outside] - target.c_n)) if nv_outside.any() else 0.0
    if has_sav:
        sav_outside = ~sav_window
        sav_slack = float(np.min(c_a[sav_outside] - target.c_a)) if sav_outside.any() else 0.0
    else:
        sav_slack = 0.0

    n_n, n_a = profile.flow_rates(t)
    queued = q > tol
    if queued.any():
        capacity = float(np.max(np.abs(n_n[queued] + p.kappa * n_a[queued] - p.mu)) / p.mu)
    else:
        capacity = 0.0

    masses = profile.masses()
    nv_mass_err = abs(masses.n_n - split.n_n) / p.n_total
    sav_mass_err = abs(masses.n_a - split.n_a) / p.n_total

    passed = (
        nv_res <= tol
        and sav_res <= tol
        and nv_slack >= -tol
        and sav_slack >= -tol
        and capacity <= cfg.profile_rel_tol
        and nv_mass_err <= cfg.profile_rel_tol
        and sav_mass_err <= cfg.profile_rel_tol
    )
    if not passed:
        logger.warning(
            "profile verification failed: nv_res=%.3g sav_res=%.3g nv_slack=%.3g sav_slack=%.3g cap=%.3g",
            nv_res,
            sav_res,
            nv_slack,
            sav_slack,
            capacity,
        )
    return VerificationReport(
        passed=passed,
        tolerance=tol,
        nv_in_window_residual=nv_res,
        sav_in_window_residual=sav_res,
        nv_outside_slack=nv_slack,
        sav_outside_slack=sav_slack,
        capacity_violation=capacity,
        nv_mass_error=nv_mass_err,
        sav_mass_error=sav_mass_err,
    )


def profile_frame(
    params: ParamsLike,
    profile: RushHourProfile,
    fare: float,
    cfg: Optional[Settings] = None,
) -> pd.DataFrame:
    """Rush-hour table with columns t, q, n_n, n_a, c_n, c_a."""
    cfg = cfg or default_settings
    t = _verification_grid(profile, cfg.profile_grid_points, cfg.profile_grid_span, None)
    q, c_n, c_a = cost_paths(params, profile, fare, t)
    n_n, n_a = profile.flow_rates(t)
    return pd.DataFrame({"t": t, "q": q, "n_n": n_n, "n_a": n_a, "c_n": c_n, "c_a": c_a})


__all__ = [
    "split_from_sav",
    "equilibrium_costs",
    "build_profile",
    "cost_paths",
    "verify_profile",
    "profile_frame",
]
