"""Two-mode bottleneck model with shared autonomous vehicles (SAVs) and normal vehicles (NVs)."""
from sav_bottleneck.core.params import ModelParams, derive, validate

__version__ = "0.1.0"

__all__ = ["ModelParams", "derive", "validate", "__version__"]
