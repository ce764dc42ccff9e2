"""Square-grid backbone: N x N cells of side alpha_bb, one node per cell,
traffic routed along grid lines (Manhattan paths) between cell nodes.

The trunk cost sums C(alpha_bb) over all hops of all pairs:

    exact:       V * C(alpha_bb) * (mu^2 / N^4) * hop_sum(N)
    asymptotic:  (2/3) * (C(alpha_bb) / alpha_bb) * mu^2 * V * L

where hop_sum(N) = sum over all cell pairs of the Manhattan distance
= (2/3) N^3 (N^2 - 1), so exact/asymptotic -> 1 like 1 - 1/N^2.

The access cost charges each user pair the cell-average cost of reaching
the two cell nodes: mu^2 * V * cbar with cbar the average of C(|x - center|)
over one cell.  Minimizing C(alpha)/alpha gives the optimal cell size,
alpha_bb = lambda for the pure exponential rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

from .errors import InfeasibleDistanceError
from .linkmodel import CostParams, LinkModel, cost_fn, per_bit_cost
from .numerics import DEFAULT_TOL, Tolerance, integrate_1d, minimize_1d
from .planar import PlanarScenario

__all__ = [
    "CostBreakdown",
    "SquareBackboneScenario",
    "manhattan_hop_sum",
    "mean_cell_access_cost",
    "square_backbone_cost",
    "square_optimal_cell",
]


@dataclass(frozen=True)
class CostBreakdown:
    """Architecture cost split: access links, trunk links, nodes."""

    local: float
    backbone: float
    nodes: float

    @property
    def total(self) -> float:
        return self.local + self.backbone + self.nodes

    def as_dict(self) -> dict[str, float]:
        return {
            "local": self.local,
            "backbone": self.backbone,
            "nodes": self.nodes,
            "total": self.total,
        }


@dataclass(frozen=True)
class SquareBackboneScenario:
    """Planar user scenario plus the grid cell size alpha_bb (km).

    The closed-form trunk cost assumes many cells per side; below 2 it is
    meaningless (rejected), below 8 it is rough (warning).
    """

    planar: PlanarScenario
    alpha_bb: float

    def __post_init__(self):
        if self.alpha_bb <= 0.0:
            raise ValueError(f"alpha_bb must be > 0, got {self.alpha_bb}")
        n = self.cells_per_side
        if n < 2:
            raise ValueError(
                f"grid of {n} cells per side (L={self.planar.length_l}, "
                f"alpha_bb={self.alpha_bb}); need at least 2"
            )
        if n < 8:
            warnings.warn(
                f"only {n} cells per side; the large-grid cost formulas are rough here",
                stacklevel=2,
            )
        if abs(self.planar.length_l / self.alpha_bb - n) > 0.01:
            warnings.warn(
                f"L/alpha_bb = {self.planar.length_l / self.alpha_bb:.4f} rounded "
                f"to N = {n} cells per side",
                stacklevel=2,
            )

    @property
    def cells_per_side(self) -> int:
        return round(self.planar.length_l / self.alpha_bb)


def manhattan_hop_sum(n: int) -> int:
    """Sum of Manhattan distances over all ordered pairs of cells of an
    n x n grid: (2/3) n^3 (n^2 - 1), always an integer."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return 2 * n**3 * (n**2 - 1) // 3


@lru_cache(maxsize=512)
def _unit_cell_access_cost(
    model: LinkModel, alpha_bb: float, tol: Tolerance
) -> float:
    # c_qkd = 1; the integral is linear in c_qkd, so the wrapper rescales
    h = alpha_bb / 2.0
    c = cost_fn(model, CostParams(c_qkd=1.0))
    if model.is_bb84 and model.cutoff_distance() <= h * math.sqrt(2.0):
        raise InfeasibleDistanceError(
            "cell corners are beyond the rate cutoff; access cost diverges"
        )
    inner_tol = Tolerance(abs=tol.abs, rel=tol.rel * 0.1, max_iter=tol.max_iter)

    def row(y: float) -> float:
        return integrate_1d(lambda x: c(math.hypot(x, y)), 0.0, h, inner_tol)

    quadrant = integrate_1d(row, 0.0, h, tol)
    return 4.0 * quadrant / alpha_bb**2


def mean_cell_access_cost(
    model: LinkModel,
    costs: CostParams,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Cell-average access cost cbar: mean of C(|x - center|) for x uniform
    in a square cell of side alpha_bb with the node at the center.

    Computed by nested 1-D quadrature over one quadrant (the integrand is
    4-fold symmetric).  The quadrature is cached per (model, cell size):
    the result is linear in c_qkd and independent of c_node, so parameter
    sweeps that vary only the cost coefficients never repeat it.  Always
    below C(alpha_bb): no point of the cell is farther from the center
    than alpha_bb * sqrt(2)/2 < alpha_bb.
    """
    return costs.c_qkd * _unit_cell_access_cost(model, alpha_bb, tol)


mean_cell_access_cost.cache_info = _unit_cell_access_cost.cache_info
mean_cell_access_cost.cache_clear = _unit_cell_access_cost.cache_clear


def square_backbone_cost(
    model: LinkModel,
    costs: CostParams,
    sc: SquareBackboneScenario,
    exact: bool = True,
) -> CostBreakdown:
    """Cost breakdown of the square-grid backbone.

    exact=True uses the finite-grid hop sum with N = round(L/alpha_bb);
    exact=False uses the large-grid asymptotic trunk term.  Access and
    node terms are the same in both modes.
    """
    p = sc.planar
    mu2 = p.mean_users**2
    n = sc.cells_per_side
    c_hop = per_bit_cost(model, costs, sc.alpha_bb)
    if exact:
        backbone = p.volume_v * c_hop * (mu2 / n**4) * manhattan_hop_sum(n)
    else:
        backbone = (2.0 / 3.0) * (c_hop / sc.alpha_bb) * mu2 * p.volume_v * p.length_l
    local = mu2 * p.volume_v * mean_cell_access_cost(model, costs, sc.alpha_bb)
    nodes = costs.c_node * n**2
    return CostBreakdown(local=local, backbone=backbone, nodes=nodes)


def square_optimal_cell(
    model: LinkModel,
    costs: CostParams,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Cell size minimizing the trunk cost factor C(alpha)/alpha.

    Equals lambda_qkd exactly for the pure exponential rate (the argmin of
    exp(alpha/lambda)/alpha); the BB84 variant is minimized numerically
    below its cutoff.
    """
    if not model.is_bb84:
        return model.lambda_qkd
    cutoff = model.cutoff_distance()
    if cutoff <= 0.0:
        raise InfeasibleDistanceError("BB84 model has zero rate at every distance")
    lo = min(model.lambda_qkd, cutoff) * 1e-3
    alpha, _ = minimize_1d(
        lambda a: per_bit_cost(model, costs, a) / a,
        lo,
        0.99 * cutoff,
        Tolerance(abs=tol.abs * model.lambda_qkd, rel=tol.rel, max_iter=tol.max_iter),
    )
    return alpha
