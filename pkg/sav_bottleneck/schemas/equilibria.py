from __future__ import annotations

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel

Regime = Literal["MC", "AC0", "AC1", "AC2", "Monopoly"]
Boundary = Literal["interior", "all_nv", "all_sav"]
Protocol = Literal["Smith", "BestResponse", "BNN"]
StabilityLabel = Literal["stable", "unstable"]


class ModeSplit(BaseModel):
    n_n: float
    n_a: float

    class Config:
        frozen = True

    @property
    def total(self) -> float:
        return self.n_n + self.n_a


class ModeCosts(BaseModel):
    c_n: float
    c_a: float
    fare: float

    class Config:
        frozen = True


class FlowSegment(BaseModel):
    """Arrival rates on the half-open interval [start, end)."""

    start: float
    end: float
    n_n: float
    n_a: float

    class Config:
        frozen = True


class RushHourProfile(BaseModel):
    t_n_minus: float
    t_n_plus: float
    t_a_minus: Optional[float] = None
    t_a_plus: Optional[float] = None
    # q(t) is linear between consecutive knots and zero outside them
    knot_times: List[float]
    knot_delays: List[float]
    segments: List[FlowSegment]

    class Config:
        frozen = True

    def queue_delay(self, t):
        return np.interp(t, self.knot_times, self.knot_delays, left=0.0, right=0.0)

    def flow_rates(self, t):
        t = np.asarray(t, dtype=float)
        n_n = np.zeros_like(t)
        n_a = np.zeros_like(t)
        for seg in self.segments:
            inside = (t >= seg.start) & (t < seg.end)
            n_n = np.where(inside, seg.n_n, n_n)
            n_a = np.where(inside, seg.n_a, n_a)
        return n_n, n_a

    def masses(self) -> ModeSplit:
        n_n = sum(s.n_n * (s.end - s.start) for s in self.segments)
        n_a = sum(s.n_a * (s.end - s.start) for s in self.segments)
        return ModeSplit(n_n=n_n, n_a=n_a)


class VerificationReport(BaseModel):
    passed: bool
    tolerance: float
    nv_in_window_residual: float
    sav_in_window_residual: float
    nv_outside_slack: float
    sav_outside_slack: float
    capacity_violation: float
    nv_mass_error: float
    sav_mass_error: float


class Equilibrium(BaseModel):
    regime: Regime
    split: ModeSplit
    fare: float
    cost: float
    cost_n: float
    cost_a: float
    profit: float
    boundary: Boundary
    degenerate: bool = False

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "regime": "MC",
                "split": {"n_n": 40.0, "n_a": 960.0},
                "fare": 100.0,
                "cost": 407.8,
                "cost_n": 407.8,
                "cost_a": 407.8,
                "profit": -129600.0,
                "boundary": "interior",
                "degenerate": False,
            }
        }


class OrderingCheck(BaseModel):
    name: str
    passed: bool
    slack: float


class OrderingReport(BaseModel):
    entry_viable: bool
    coincident: bool
    checks: List[OrderingCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class SensitivityReport(BaseModel):
    regime: Regime
    dc_dmu: float
    dc_dmu_fd: float
    paradox: bool
    paradox_lhs: Optional[float] = None


class FareRule(BaseModel):
    """Fare faced by SAV riders in the day-to-day dynamics.

    `fixed` charges `fare` regardless of ridership; `average_cost` charges
    m + F_a / n_a.
    """

    kind: Literal["fixed", "average_cost"] = "average_cost"
    fare: Optional[float] = None

    class Config:
        frozen = True


class Trajectory(BaseModel):
    protocol: Protocol
    times: List[float]
    states: List[float]
    converged: bool
    converged_to: Optional[float] = None
    converged_label: Optional[str] = None


class RestPointStability(BaseModel):
    label: str
    n_a: float
    status: StabilityLabel
    # coincident AC roots: a single tangency point, unstable from below
    degenerate: bool = False


class StabilityReport(BaseModel):
    protocol: Protocol
    fare_rule: FareRule
    rest_points: List[RestPointStability]

    def status_of(self, label: str) -> Optional[StabilityLabel]:
        for rp in self.rest_points:
            if rp.label == label:
                return rp.status
        return None
