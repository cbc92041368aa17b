from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Optional, Union

from pydantic import BaseModel

from sav_bottleneck.core.config import settings
from sav_bottleneck.core.errors import ParameterValidationError

logger = logging.getLogger(__name__)


PARAM_FIELDS = (
    "n_total",
    "mu",
    "kappa",
    "theta",
    "beta",
    "gamma",
    "t_f",
    "f_n",
    "f_a",
    "m",
)


class ModelParams(BaseModel):
    """Exogenous scalars of the two-mode bottleneck.

    NV value of time is normalised to 1 and the desired arrival time to 0,
    so neither appears as a field.
    """

    n_total: float
    mu: float
    kappa: float
    theta: float
    beta: float
    gamma: float
    t_f: float = 0.0
    f_n: float = 0.0
    f_a: float = 0.0
    m: float = 0.0

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "n_total": 1000.0,
                "mu": 0.025,
                "kappa": 0.01,
                "theta": 0.7,
                "beta": 0.4,
                "gamma": 0.4,
                "t_f": 10.0,
                "f_n": 1.0,
                "f_a": 129600.0,
                "m": 100.0,
            }
        }

    def with_updates(self, **changes: float) -> "ModelParams":
        return ModelParams(**{**self.model_dump(), **changes})


class ValidityRecord(BaseModel):
    interior: bool
    ac_viable: bool
    beta_theta_ok: bool

    class Config:
        frozen = True


class ValidatedParams(BaseModel):
    params: ModelParams
    validity: ValidityRecord

    class Config:
        frozen = True


class DerivedConstants(BaseModel):
    a_prime: float
    a_coef: float
    b_coef: float
    eta: float
    discriminant: float
    k_root: Optional[float]
    n_min: float

    class Config:
        frozen = True


ParamsLike = Union[ModelParams, ValidatedParams]


def _validate_finite(params: ModelParams) -> None:
    bad = [name for name in PARAM_FIELDS if not math.isfinite(getattr(params, name))]
    if bad:
        raise ParameterValidationError(f"Non-finite parameters: {bad}")


def _validate_positive(params: ModelParams) -> None:
    bad = [name for name in ("n_total", "mu", "beta", "gamma") if getattr(params, name) <= 0]
    if bad:
        raise ParameterValidationError(f"Parameters must be strictly positive: {bad}")
    negative = [name for name in ("t_f", "f_n", "f_a", "m") if getattr(params, name) < 0]
    if negative:
        raise ParameterValidationError(f"Parameters must be non-negative: {negative}")


def _validate_unit_interval(params: ModelParams) -> None:
    for name in ("kappa", "theta"):
        value = getattr(params, name)
        if not 0.0 < value < 1.0:
            raise ParameterValidationError(f"{name} must lie in (0, 1), got {value}")


def _validate_beta_theta(params: ModelParams) -> None:
    if params.beta >= params.theta:
        raise ParameterValidationError(
            f"Early-arrival penalty beta={params.beta} must be below theta={params.theta}"
        )


def validate(params: ParamsLike, tol: Optional[float] = None) -> ValidatedParams:
    """Reject impossible parameters and tag the rest with soft validity flags."""
    if isinstance(params, ValidatedParams):
        return params

    _validate_finite(params)
    _validate_positive(params)
    _validate_unit_interval(params)
    _validate_beta_theta(params)

    tol = settings.threshold_tol if tol is None else tol
    derived = derive(params)
    a_n = derived.a_coef * params.n_total
    validity = ValidityRecord(
        interior=derived.b_coef > tol and a_n - derived.b_coef > tol,
        ac_viable=derived.discriminant >= -tol,
        beta_theta_ok=True,
    )
    if not validity.interior:
        logger.debug("corner parameters: B=%s AN=%s", derived.b_coef, a_n)
    return ValidatedParams(params=params, validity=validity)


def raw(params: ParamsLike) -> ModelParams:
    return params.params if isinstance(params, ValidatedParams) else params


@lru_cache(maxsize=4096)
def _derive_cached(params: ModelParams) -> DerivedConstants:
    a_prime = params.beta * params.gamma / (params.mu * (params.beta + params.gamma))
    a_coef = a_prime * (1.0 - params.theta)
    b_coef = params.theta * params.t_f + params.m - (params.t_f + params.f_n)
    eta = (1.0 - params.kappa) / (1.0 - params.theta)
    gap = a_coef * params.n_total - b_coef
    discriminant = gap * gap - 4.0 * a_coef * params.f_a
    k_root = math.sqrt(discriminant) if discriminant >= 0.0 else None
    n_min = (b_coef + math.sqrt(4.0 * a_coef * params.f_a)) / a_coef
    return DerivedConstants(
        a_prime=a_prime,
        a_coef=a_coef,
        b_coef=b_coef,
        eta=eta,
        discriminant=discriminant,
        k_root=k_root,
        n_min=n_min,
    )


def derive(params: ParamsLike) -> DerivedConstants:
    """Constants shared by every solver: A', A, B, eta, discriminant, K and N_min."""
    return _derive_cached(raw(params))


def near_zero_discriminant(params: ParamsLike, tol: Optional[float] = None) -> bool:
    """True when the two AC roots coincide within tolerance (relative to (AN - B)^2)."""
    tol = settings.threshold_tol if tol is None else tol
    d = derive(params)
    gap = d.a_coef * raw(params).n_total - d.b_coef
    return abs(d.discriminant) <= tol * max(1.0, gap * gap)


__all__ = [
    "PARAM_FIELDS",
    "ModelParams",
    "ValidityRecord",
    "ValidatedParams",
    "DerivedConstants",
    "ParamsLike",
    "validate",
    "derive",
    "raw",
    "near_zero_discriminant",
]
