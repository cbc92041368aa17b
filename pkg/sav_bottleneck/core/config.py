from typing import Literal

from pydantic import BaseModel, Field


class Settings(BaseModel):
    """Solver settings.

    Tolerances, grid sizes and integrator knobs shared by every solver.
    Scenario values (population, capacity, costs) live in ModelParams, not here.
    Override per run with `settings.model_copy(update={...})`.
    """

    # knife-edge comparisons (B > 0, discriminant >= 0, coincident roots)
    threshold_tol: float = Field(default=1e-9, gt=0)

    profile_grid_points: int = Field(default=4001, ge=3)
    profile_grid_span: float = Field(default=1.2, gt=1.0)
    profile_rel_tol: float = Field(default=1e-6, gt=0)

    stability_eps: float = Field(default=1e-9, gt=0)
    stability_dwell: int = Field(default=100, ge=1)
    stability_horizon: float = Field(default=1e4, gt=0)
    stability_max_step_frac: float = Field(default=1e-3, gt=0)
    stability_max_steps: int = Field(default=200_000, ge=10)
    integrator: Literal["heun", "lsoda"] = "heun"
    logit_temperature: float = Field(default=1e-2, gt=0)
    sav_cost_cap: float = Field(default=1e12, gt=0)

    fd_rel_step: float = Field(default=1e-5, gt=0)

    lp_method: Literal["greedy", "simplex"] = "greedy"
    lp_cells: int = Field(default=2000, ge=10)
    lp_margin: float = Field(default=1.2, ge=1.0)

    sweep_threads: int = Field(default=1, ge=1)
    seed: int = 0


settings = Settings()
