from __future__ import annotations

from typing import List

from pydantic import BaseModel


class CheckResult(BaseModel):
    """Outcome of one oracle check over its batch of draws."""

    name: str
    passed: bool
    draws: int = 0
    worst: float = 0.0
    detail: str = ""
    elapsed: float = 0.0

    class Config:
        json_schema_extra = {
            "example": {
                "name": "closed_form_vs_bisection",
                "passed": True,
                "draws": 500,
                "worst": 3.2e-13,
                "detail": "max |n_a - root| / N",
                "elapsed": 0.41,
            }
        }


class OracleReport(BaseModel):
    seed: int
    quick: bool
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]
