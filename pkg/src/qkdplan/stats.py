"""Monte-Carlo aggregation helpers: replica-level mean and standard error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McEstimate:
    """Mean of independent replica values with its standard error."""

    estimate: float
    std_error: float
    replicas: int

    @classmethod
    def from_replicas(cls, values) -> "McEstimate":
        arr = np.asarray(values, dtype=float)
        n = arr.size
        if n < 2:
            raise ValueError("need at least 2 replicas for a standard error")
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(n))
        return cls(estimate=mean, std_error=se, replicas=n)

    def z_score(self, reference: float) -> float:
        """Deviation from a reference value in units of the standard error."""
        if self.std_error == 0.0:
            return 0.0 if self.estimate == reference else math.inf
        return (self.estimate - reference) / self.std_error

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.z_score(reference)) <= n_sigma
