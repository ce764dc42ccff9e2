"""Architecture choice: all-pairs chains versus a square backbone.

Serving every user pair by its own repeater chain costs
(V C(l) + c_node) delta / l; routing through a shared square grid costs
(2/3)(C(a)/a) mu^2 V L for trunk links plus c_node (L/a)^2 for nodes (plus
a local-access term the large-network comparison neglects).  Setting the
two totals equal at the grid's own optimal cell size yields a critical
user density

    sigma* = 1 / sqrt(L^3 alpha_bb_opt gamma),

below which a backbone can never pay off (the minimum viable population
is sigma* L^2 = sqrt(L / (gamma alpha_bb_opt)) users).  Above sigma* the
backbone wins only if trusted-node hardware is expensive enough:

    c_node (sigma^2/sigma*^2 - 1)
        >= C(alpha_bb_opt) V (sigma^2/sigma*^2) (2/(3 gamma) - 1),

which is algebraically the same statement as "optimal chain cost >=
large-network square-backbone cost", hence necessary for the backbone to
be preferable.

recommend() makes the comparison twice: the headline choice uses the
exact finite-grid backbone sum (at small grid sizes the large-network
formula can flip the answer), while full_inequality_holds reports the
large-network comparison whose implication structure the inequality
above belongs to.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .chain import ChainScenario, chain_optimal_spacing
from .linkmodel import CostParams, LinkModel, per_bit_cost
from .numerics import DEFAULT_TOL, Tolerance
from .planar import PlanarScenario, delta_analytic, gamma_constant
from .square import (
    CostBreakdown,
    SquareBackboneScenario,
    square_backbone_cost,
    square_optimal_cell,
)

__all__ = [
    "LINEAR_CHAINS",
    "SQUARE_BACKBONE",
    "ConditionReport",
    "Recommendation",
    "critical_density",
    "minimum_user_count",
    "necessary_condition",
    "recommend",
]

LINEAR_CHAINS = "LinearChains"
SQUARE_BACKBONE = "SquareBackbone"


def critical_density(alpha_bb_opt: float, length_l: float) -> float:
    """Critical user density sigma* = 1/sqrt(L^3 alpha_bb_opt gamma) in
    users per km^2; below it chains always beat the square backbone."""
    if alpha_bb_opt <= 0.0 or length_l <= 0.0:
        raise ValueError("alpha_bb_opt and length_l must be > 0")
    return 1.0 / math.sqrt(length_l**3 * alpha_bb_opt * gamma_constant())


def minimum_user_count(alpha_bb_opt: float, length_l: float) -> float:
    """Minimum viable population sigma* L^2 = sqrt(L/(gamma alpha_bb_opt)):
    with fewer users than this a backbone can never pay off."""
    return critical_density(alpha_bb_opt, length_l) * length_l**2


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the node-cost inequality, with both sides for inspection."""

    holds: bool
    lhs: float
    rhs: float
    sigma: float
    sigma_star: float

    def __bool__(self) -> bool:
        return self.holds


def necessary_condition(
    model: LinkModel,
    costs: CostParams,
    sc: PlanarScenario,
    alpha_bb_opt: float,
) -> ConditionReport:
    """Evaluate c_node (sigma^2/sigma*^2 - 1) >= C(a*) V (sigma^2/sigma*^2)
    (2/(3 gamma) - 1) with sigma = alpha_u^-2.

    A false result rules the backbone out; a true one only keeps it in the
    running (the condition is necessary, not sufficient).  Always false at
    sigma <= sigma* and whenever c_node = 0: the right side is positive
    because 2/(3 gamma) - 1 > 0.
    """
    sigma = sc.alpha_u**-2
    sigma_star = critical_density(alpha_bb_opt, sc.length_l)
    ratio = (sigma / sigma_star) ** 2
    lhs = costs.c_node * (ratio - 1.0)
    rhs = (
        per_bit_cost(model, costs, alpha_bb_opt)
        * sc.volume_v
        * ratio
        * (2.0 / (3.0 * gamma_constant()) - 1.0)
    )
    return ConditionReport(holds=lhs >= rhs, lhs=lhs, rhs=rhs, sigma=sigma,
                           sigma_star=sigma_star)


@dataclass(frozen=True)
class Recommendation:
    """Architecture comparison result.

    costs maps architecture name to its breakdown at that architecture's
    own optimum; chosen carries the smaller total (ties go to chains:
    fewer trusted locations, the conservative security posture; the note
    records that when it bites).  full_inequality_holds is the
    large-network comparison (chain at its optimal spacing vs the
    asymptotic backbone formula), the statement whose necessary condition
    necessary_condition_holds reports.
    """

    chosen: str
    costs: dict[str, CostBreakdown] = field(repr=False)
    sigma_star: float = 0.0
    necessary_condition_holds: bool = False
    full_inequality_holds: bool = False
    note: str = ""

    def __post_init__(self):
        if self.chosen not in (LINEAR_CHAINS, SQUARE_BACKBONE):
            raise ValueError(f"unknown architecture {self.chosen!r}")
        if self.chosen not in self.costs:
            raise ValueError("chosen architecture missing from the costs map")
        if self.sigma_star <= 0.0:
            raise ValueError("sigma_star must be > 0")
        total = self.costs[self.chosen].total
        for other in self.costs.values():
            if total > other.total:
                raise ValueError("chosen architecture does not minimize total cost")


def recommend(
    model: LinkModel,
    costs: CostParams,
    sc: PlanarScenario,
    include_local_access: bool = False,
    tol: Tolerance = DEFAULT_TOL,
) -> Recommendation:
    """Compare all-pairs chains against the square backbone, each at its
    own optimum, and pick the cheaper.

    The backbone side uses the exact finite-grid trunk sum.  By default the
    grid's local-access term is left out of both the totals and the
    large-network inequality (it is negligible at scale, and the critical
    density algebra is stated without it); include_local_access=True adds
    the computed term to both.  Infeasibility (a grid or spacing the link
    model cannot serve) propagates as InfeasibleDistanceError.
    """
    # the all-pairs total is (V C(l) + c_node) delta / l, proportional to a
    # single chain's cost, so the single-chain optimizer gives the spacing
    single = ChainScenario(length_l=sc.length_l, volume_v=sc.volume_v)
    ell_opt, _ = chain_optimal_spacing(model, costs, single, tol)
    delta = delta_analytic(sc)
    chain_links = sc.volume_v * per_bit_cost(model, costs, ell_opt) * delta / ell_opt
    chain_nodes = costs.c_node * delta / ell_opt
    chain_breakdown = CostBreakdown(local=0.0, backbone=chain_links, nodes=chain_nodes)

    alpha_opt = square_optimal_cell(model, costs, tol)
    sigma_star = critical_density(alpha_opt, sc.length_l)
    nc = necessary_condition(model, costs, sc, alpha_opt)

    note = ""
    breakdowns = {LINEAR_CHAINS: chain_breakdown}
    try:
        # the grid size warnings (rounding, coarseness) are routine here:
        # the planner rounds L/alpha_opt by construction, so they go into
        # the note instead of the warning stream
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            square_sc = SquareBackboneScenario(planar=sc, alpha_bb=alpha_opt)
        if caught:
            note = "; ".join(str(w.message) for w in caught)
    except ValueError:
        note = (f"square grid infeasible: the region is smaller than two "
                f"optimal cells (L={sc.length_l}, cell={alpha_opt:.3g})")
        return Recommendation(
            chosen=LINEAR_CHAINS,
            costs=breakdowns,
            sigma_star=sigma_star,
            necessary_condition_holds=nc.holds,
            full_inequality_holds=False,
            note=note,
        )

    exact = square_backbone_cost(model, costs, square_sc, exact=True)
    asym = square_backbone_cost(model, costs, square_sc, exact=False)
    if include_local_access:
        local = exact.local
    else:
        local = 0.0
    square_breakdown = CostBreakdown(local=local, backbone=exact.backbone, nodes=exact.nodes)
    breakdowns[SQUARE_BACKBONE] = square_breakdown

    full_holds = chain_breakdown.total >= (asym.backbone + asym.nodes + local)

    if square_breakdown.total < chain_breakdown.total:
        chosen = SQUARE_BACKBONE
    else:
        chosen = LINEAR_CHAINS
        if square_breakdown.total == chain_breakdown.total:
            tie = "totals tied; chains chosen: fewer trusted locations"
            note = f"{note}; {tie}" if note else tie

    return Recommendation(
        chosen=chosen,
        costs=breakdowns,
        sigma_star=sigma_star,
        necessary_condition_holds=nc.holds,
        full_inequality_holds=full_holds,
        note=note,
    )
