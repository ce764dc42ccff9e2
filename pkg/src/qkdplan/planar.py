"""All-pairs chain architecture on a square region: every user pair gets
its own relay chain, so the total cost is the per-km chain cost times the
expected sum of pairwise distances

    delta = E[ sum_{k != l} |U_k - U_l| ] = gamma * L^5 / alpha_u^4

for users forming a Poisson process of intensity alpha_u^-2 on an L x L
square.  The sum runs over ordered pairs, i.e. each unordered pair counts
twice; gamma is the mean distance between two independent uniform points
in the unit square:

    gamma = (1/3) ln(1 + sqrt 2) + (2 + sqrt 2)/15  ~ 0.5214.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .linkmodel import CostParams, LinkModel, per_bit_cost
from .stats import McEstimate

__all__ = [
    "PlanarScenario",
    "gamma_constant",
    "delta_analytic",
    "delta_monte_carlo",
    "planar_chain_total_cost",
]


def gamma_constant() -> float:
    """Mean distance between two uniform points in the unit square."""
    return math.log(1.0 + math.sqrt(2.0)) / 3.0 + (2.0 + math.sqrt(2.0)) / 15.0


@dataclass(frozen=True)
class PlanarScenario:
    """Square side L (km), user spacing alpha_u (km, intensity alpha_u^-2)
    and per-pair call volume V (bit/s)."""

    length_l: float
    alpha_u: float
    volume_v: float

    def __post_init__(self):
        if self.length_l <= 0.0:
            raise ValueError(f"length_l must be > 0, got {self.length_l}")
        if self.alpha_u <= 0.0:
            raise ValueError(f"alpha_u must be > 0, got {self.alpha_u}")
        if self.volume_v <= 0.0:
            raise ValueError(f"volume_v must be > 0, got {self.volume_v}")

    @property
    def mean_users(self) -> float:
        """Expected user count mu = (L / alpha_u)^2."""
        return (self.length_l / self.alpha_u) ** 2


def delta_analytic(sc: PlanarScenario) -> float:
    """Expected ordered-pair distance sum gamma * L^5 / alpha_u^4 (km)."""
    return gamma_constant() * sc.length_l**5 / sc.alpha_u**4


def delta_monte_carlo(sc: PlanarScenario, replicas: int, seed: int) -> McEstimate:
    """Monte-Carlo estimate of delta.

    Each replica draws a Poisson(mu) user count (the process definition,
    not a fixed count: the pair-sum expectation differs), places the users
    uniformly, and sums distances over ordered pairs.  The standard error
    comes from the replica-level spread; results are deterministic for a
    given (seed, replicas) regardless of evaluation order.
    """
    if replicas < 2:
        raise ValueError(f"need at least 2 replicas, got {replicas}")
    mu = sc.mean_users
    children = np.random.SeedSequence(seed).spawn(replicas)
    sums = np.empty(replicas)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        n = rng.poisson(mu)
        if n < 2:
            sums[i] = 0.0
            continue
        pts = rng.uniform(0.0, sc.length_l, size=(n, 2))
        # pdist gives unordered pairs; the ordered-pair sum is twice that
        sums[i] = 2.0 * float(pdist(pts).sum())
    return McEstimate.from_replicas(sums)


def planar_chain_total_cost(
    model: LinkModel, costs: CostParams, sc: PlanarScenario, ell: float
) -> float:
    """Total cost of giving every user pair its own chain at spacing ell:

        (V * C(ell) / ell + c_node / ell) * delta

    delta is a constant factor in ell, so the optimal spacing coincides
    with the two-user chain optimum.
    """
    if ell <= 0.0:
        raise ValueError(f"spacing must be > 0, got {ell}")
    per_km = (sc.volume_v * per_bit_cost(model, costs, ell) + costs.c_node) / ell
    return per_km * delta_analytic(sc)
