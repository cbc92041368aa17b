from __future__ import annotations

from typing import Callable, List

import numpy as np
from scipy.optimize import brentq


def schedule_cost(t, beta: float, gamma: float):
    """Schedule-delay cost of arriving at t (desired arrival at 0)."""
    t = np.asarray(t, dtype=float)
    return np.where(t < 0.0, -beta * t, gamma * t)


def _schedule_cost_antiderivative(t, beta: float, gamma: float):
    t = np.asarray(t, dtype=float)
    return np.where(t < 0.0, -0.5 * beta * t * t, 0.5 * gamma * t * t)


def schedule_cost_cell_average(left, right, beta: float, gamma: float):
    """Exact average of the schedule cost over each cell [left, right]."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    upper = _schedule_cost_antiderivative(right, beta, gamma)
    lower = _schedule_cost_antiderivative(left, beta, gamma)
    return (upper - lower) / (right - left)


def bracketed_roots(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    samples: int = 2001,
    xtol: float = 1e-12,
    vectorized: bool = False,
) -> List[float]:
    """Roots of f on [lo, hi] found by a sign scan followed by brentq per bracket.

    With `vectorized` the scan calls f once on the whole sample array.
    """
    xs = np.linspace(lo, hi, samples)
    values = np.asarray(f(xs), dtype=float) if vectorized else np.array([f(x) for x in xs])
    roots: List[float] = []
    for i in range(samples - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(float(xs[i]))
            continue
        if np.sign(a) != np.sign(b) and b != 0.0:
            roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)))
    if values[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def central_difference(f: Callable[[float], float], x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


__all__ = [
    "schedule_cost",
    "schedule_cost_cell_average",
    "bracketed_roots",
    "central_difference",
    "relative_gap",
]
