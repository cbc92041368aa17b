from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel

from sav_bottleneck.schemas.equilibria import ModeSplit

FirstBestCase = Literal["mixed", "nv_only", "sav_only"]
Clamp = Literal["none", "at_zero", "at_N"]
EtaRegime = Literal["eta>=1", "1>eta>=1/2", "1/2>eta>0"]


class FirstBestSolution(BaseModel):
    case_label: FirstBestCase
    split: ModeSplit
    cost: float
    # NV (or single-mode) window; the SAV window is set only when SAVs flow
    t_n_minus: float
    t_n_plus: float
    t_a_minus: Optional[float] = None
    t_a_plus: Optional[float] = None
    mu: float
    kappa: float
    toll_switch_level: Optional[float] = None
    toll_peak: float

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "case_label": "mixed",
                "split": {"n_n": 12.12, "n_a": 987.88},
                "cost": 187.0,
                "t_n_minus": -440.0,
                "t_n_plus": 440.0,
                "t_a_minus": -197.58,
                "t_a_plus": 197.58,
                "mu": 0.025,
                "kappa": 0.01,
                "toll_switch_level": 96.97,
                "toll_peak": 8000.0,
            }
        }

    def knots(self) -> List[float]:
        if self.t_a_minus is None or self.t_a_plus is None:
            return [self.t_n_minus, 0.0, self.t_n_plus]
        return [self.t_n_minus, self.t_a_minus, 0.0, self.t_a_plus, self.t_n_plus]


class DiscreteSolution(BaseModel):
    method: Literal["greedy", "simplex"]
    cell_width: float
    t_mid: List[float]
    n_n: List[float]
    n_a: List[float]
    tau: List[float]
    objective: float
    mass_multiplier: float

    @property
    def sav_mass(self) -> float:
        return sum(self.n_a) * self.cell_width

    @property
    def nv_mass(self) -> float:
        return sum(self.n_n) * self.cell_width


class ParetoReport(BaseModel):
    eta: float
    case_label: FirstBestCase
    cost_first_best: float
    cost_mc: float
    cost_gap: float
    expected_gap: float
    identity_rhs: Optional[float] = None
    pareto_improvement: bool
    passed: bool
    note: str


class SelfFinancingReport(BaseModel):
    lhs: float
    rhs: float
    relative_gap: float
    passed: bool
    social_cost: float


class SecondBestSolution(BaseModel):
    n_a_sb: float
    n_a_unclamped: float
    fare_sb: float
    fare_at_split: float
    clamped: Clamp
    sc_sb: float


class ScDerivativeTerms(BaseModel):
    nv_term: float
    sav_congestion_term: float
    sav_fare_transfer: float
    profit_margin_term: float
    profit_fare_transfer: float

    @property
    def total(self) -> float:
        return (
            self.nv_term
            + self.sav_congestion_term
            + self.sav_fare_transfer
            + self.profit_margin_term
            + self.profit_fare_transfer
        )


class Threshold(BaseModel):
    value: Optional[float] = None
    reason: Optional[str] = None


class WelfareTable(BaseModel):
    sc_mc: float
    sc_ac0: float
    sc_ac2: Optional[float] = None
    sc_monopoly: float
    printed_sc_ac0: float
    printed_sc_monopoly: float
    ranking: List[str]
    expected_ranking: List[str]
    chain_holds: bool
    thresholds: Dict[str, Threshold]
    eta_regime: EtaRegime
    fixed_cost_regime: Optional[Literal["f_a>=f_a_c", "f_a<f_a_c"]] = None


class StrategyReport(BaseModel):
    current_n_a: float
    n_a1: Optional[float] = None
    eta: float
    activate_commuter_objective: bool
    activate_social_objective: bool
    commuter_objective: str
    social_objective: str
    kappa_target: Optional[float] = None
    steps: List[str]
