from __future__ import annotations

from typing import Dict, List

STRATEGY_STEPS: Dict[str, List[str]] = {
    "two_step": [
        "Step 1: leave fares unregulated and let the natural monopoly build SAV ridership",
        "Step 2: once ridership reaches the monopoly level, impose average-cost pricing",
    ],
    "three_step": [
        "Step 1: leave fares unregulated and let the natural monopoly build SAV ridership",
        "Step 2: keep the monopoly until kappa falls to the target where AC2 beats the monopoly on social cost",
        "Step 3: once kappa reaches that target, impose average-cost pricing",
    ],
    "no_ac": [
        "Average-cost pricing has no viable equilibrium; keep fares unregulated",
    ],
}

OBJECTIVE_VERDICTS: Dict[str, str] = {
    "activate": "Activate AC pricing",
    "defer_basin": "Defer: ridership is below the unstable AC threshold, so AC pricing would collapse it",
    "defer_maturation": "Defer: keep the monopoly until the capacity effect matures",
    "no_ac": "No viable AC regime",
}


def verdict_text(key: str) -> str:
    return OBJECTIVE_VERDICTS.get(key, key)


def steps_for_plan(plan: str) -> List[str]:
    """Ordered regulatory steps for a plan name ("two_step", "three_step", "no_ac")."""
    return list(STRATEGY_STEPS.get(plan, []))


__all__ = ["STRATEGY_STEPS", "OBJECTIVE_VERDICTS", "verdict_text", "steps_for_plan"]
