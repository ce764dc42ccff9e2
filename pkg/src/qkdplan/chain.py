"""Linear-chain architecture: two users a distance L apart, served by a
one-dimensional chain of trusted relays with uniform spacing l.

Total deployment cost with V bit/s of demand:

    cost(l) = c_qkd * (L/l) * (V / R(l)) + c_node * (L/l)

(L/l links, each dimensioned to V/R(l) parallel device pairs, plus the
relay nodes).  Discretisation is deliberately ignored: L/l and V/R stay
continuous, per the continuum assumptions L >> l and V >> R(l);
deployment_counts() reports rounded hardware counts for planners.

For the pure exponential rate the optimal spacing solves

    l/lambda = 1 + (c_node/c_qkd) * (R0/V) * exp(-l/lambda),

which reduces to l_opt = lambda when nodes are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDistanceError
from .linkmodel import CostParams, LinkModel, per_bit_cost, rate
from .numerics import DEFAULT_TOL, Tolerance, fixed_point, minimize_1d

__all__ = [
    "ChainScenario",
    "chain_total_cost",
    "chain_optimal_spacing",
    "deployment_counts",
    "EqualSpacingReport",
    "equal_spacing_is_optimal",
]


@dataclass(frozen=True)
class ChainScenario:
    """User separation L (km) and call volume V (bit/s) between them."""

    length_l: float
    volume_v: float

    def __post_init__(self):
        if self.length_l <= 0.0:
            raise ValueError(f"length_l must be > 0, got {self.length_l}")
        if self.volume_v <= 0.0:
            raise ValueError(f"volume_v must be > 0, got {self.volume_v}")


def chain_total_cost(
    model: LinkModel, costs: CostParams, sc: ChainScenario, ell: float
) -> float:
    """Total chain cost at relay spacing ell; raises InfeasibleDistanceError
    where the rate is zero."""
    if ell <= 0.0:
        raise ValueError(f"spacing must be > 0, got {ell}")
    links = sc.length_l / ell
    return links * (sc.volume_v * per_bit_cost(model, costs, ell) + costs.c_node)


def chain_optimal_spacing(
    model: LinkModel,
    costs: CostParams,
    sc: ChainScenario,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[float, float]:
    """Cost-minimizing relay spacing and the cost achieved there.

    Pure exponential: c_node = 0 gives l_opt = lambda exactly; otherwise
    the implicit relation is solved by fixed-point iteration in the
    normalized variable x = l/lambda (the contraction constant is then
    independent of lambda).  The result always satisfies l_opt >= lambda.

    BB84: the implicit relation assumes the linear log-rate region, so the
    cost is minimized directly over (0, 0.99 * cutoff) instead.
    """
    lam = model.lambda_qkd
    if model.is_bb84:
        cutoff = model.cutoff_distance()
        if cutoff <= 0.0:
            raise InfeasibleDistanceError("BB84 model has zero rate at every distance")
        lo = min(lam, cutoff) * 1e-3
        ell, _ = minimize_1d(
            lambda l: chain_total_cost(model, costs, sc, l),
            lo,
            0.99 * cutoff,
            Tolerance(abs=tol.abs * lam, rel=tol.rel, max_iter=tol.max_iter),
        )
        return ell, chain_total_cost(model, costs, sc, ell)

    q = (costs.c_node / costs.c_qkd) * (model.r0 / sc.volume_v)
    if q == 0.0:
        ell = lam
    else:
        x = fixed_point(lambda x: 1.0 + q * math.exp(-x), 1.0 + q, tol)
        ell = lam * x
    return ell, chain_total_cost(model, costs, sc, ell)


def deployment_counts(model: LinkModel, sc: ChainScenario, ell: float) -> tuple[int, int]:
    """Rounded hardware counts for a spacing ell: (relay nodes, parallel
    link pairs per segment).  Diagnostic only; the cost formulas stay
    continuous."""
    r = rate(model, ell)
    if r <= 0.0:
        raise InfeasibleDistanceError(f"zero rate at spacing {ell}")
    segments = math.ceil(sc.length_l / ell)
    return max(segments - 1, 0), math.ceil(sc.volume_v / r)


@dataclass(frozen=True)
class EqualSpacingReport:
    """Result of probing random chain partitions against the uniform one."""

    passed: bool
    worst_margin: float  # most negative value of sum C(l_i) - (n+1) C(L/(n+1))
    trials: int

    def __bool__(self) -> bool:
        return self.passed


def equal_spacing_is_optimal(
    model: LinkModel,
    n: int,
    total: float,
    trials: int,
    seed: int,
) -> EqualSpacingReport:
    """Probe the equal-spacing optimality property on random partitions.

    Convexity of C(l) implies sum_i C(l_i) >= (n+1) C(total/(n+1)) for any
    partition of `total` into n+1 segment lengths.  Draws `trials` random
    partitions (n uniform cut points) and reports the worst margin; the
    inequality is scale-invariant in c_qkd so unit cost is used.  Segments
    past a BB84 cutoff have infinite per-bit cost and satisfy the
    inequality trivially.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 interior nodes, got {n}")
    if total <= 0.0:
        raise ValueError(f"total must be > 0, got {total}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    segs = n + 1
    uniform_rate = rate(model, total / segs)
    if uniform_rate <= 0.0:
        raise InfeasibleDistanceError(
            "uniform spacing already beyond the rate cutoff; property undefined"
        )
    rhs = segs / uniform_rate
    slack = 1e-9 * abs(rhs)
    worst = math.inf
    for _ in range(trials):
        cuts = np.sort(rng.uniform(0.0, total, size=n))
        lengths = np.diff(np.concatenate(([0.0], cuts, [total])))
        lhs = 0.0
        for l in lengths:
            r = rate(model, float(l))
            if r <= 0.0:
                lhs = math.inf
                break
            lhs += 1.0 / r
        margin = lhs - rhs
        worst = min(worst, margin)
    return EqualSpacingReport(passed=worst >= -slack, worst_margin=worst, trials=trials)
