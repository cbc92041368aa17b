from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from sav_bottleneck.core.params import PARAM_FIELDS, ModelParams
from sav_bottleneck.schemas.equilibria import Protocol


class ScenarioConfig(BaseModel):
    """A bundled or user scenario: model parameters plus command options."""

    name: str = "scenario"
    params: ModelParams
    regimes: List[str] = Field(default_factory=lambda: ["MC", "AC0", "AC1", "AC2", "Monopoly"])

    sweep_axis: str = "mu"
    sweep_min: Optional[float] = None
    sweep_max: Optional[float] = None
    sweep_steps: int = Field(default=50, ge=2)

    protocol: Protocol = "Smith"
    n_a0: Optional[float] = None
    horizon: Optional[float] = None
    current_n_a: Optional[float] = None

    eta_min: float = 0.05
    eta_max: float = 1.5
    eta_steps: int = Field(default=30, ge=2)
    n_a_steps: int = Field(default=101, ge=2)

    lp_cells: Optional[int] = Field(default=None, ge=10)
    tol: Optional[float] = Field(default=None, gt=0)
    seed: int = 0

    # provenance notes for free inputs chosen by hand
    derived_choices: Dict[str, str] = Field(default_factory=dict)

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def _check_sweep(self) -> "ScenarioConfig":
        if self.sweep_axis not in PARAM_FIELDS:
            raise ValueError(f"sweep_axis must be a parameter name, got {self.sweep_axis!r}")
        if self.sweep_min is not None and self.sweep_max is not None and not self.sweep_min < self.sweep_max:
            raise ValueError("sweep range is empty: sweep_min must be below sweep_max")
        if self.eta_min >= self.eta_max:
            raise ValueError("eta range is empty: eta_min must be below eta_max")
        return self

    @classmethod
    def from_flat(cls, data: Dict[str, object]) -> "ScenarioConfig":
        """Build from a flat mapping where parameter names sit at the top level."""
        params = {k: v for k, v in data.items() if k in PARAM_FIELDS}
        notes = {
            k[len("derived_choice_"):]: str(v) for k, v in data.items() if k.startswith("derived_choice_")
        }
        options = {
            k: v for k, v in data.items() if k not in PARAM_FIELDS and not k.startswith("derived_choice_")
        }
        return cls(params=ModelParams(**params), derived_choices=notes, **options)


SubCommand = Literal[
    "equilibrium",
    "profile",
    "stability",
    "firstbest",
    "secondbest",
    "welfare",
    "paradox",
    "strategy",
    "verify",
]
