import math
from dataclasses import dataclass

import numpy as np


def safe_value(v):
    """Convert numpy scalars/arrays and non-finite floats to JSON-serializable Python values."""
    if isinstance(v, np.ndarray):
        return [safe_value(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [safe_value(x) for x in v]
    if isinstance(v, dict):
        return {str(k): safe_value(x) for k, x in v.items()}
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


@dataclass(frozen=True)
class EstimateWithError:
    """A Monte Carlo estimate with its normal-approximation standard error."""
    value: float
    std_error: float
    n_samples: int
    seed: int | None = None
    # per-cell (x, x2, value, std_error) when value is a grid minimum
    cells: tuple = ()

    def band(self, sigmas: float) -> tuple[float, float]:
        return (self.value - sigmas * self.std_error, self.value + sigmas * self.std_error)

    def covers(self, target: float, sigmas: float, floor: float = 0.0) -> bool:
        """True if target lies within sigmas standard errors (plus an absolute floor)."""
        return abs(self.value - target) <= sigmas * self.std_error + floor

    def to_dict(self) -> dict:
        return safe_value({
            "value": self.value, "std_error": self.std_error,
            "n_samples": self.n_samples, "seed": self.seed,
        })
