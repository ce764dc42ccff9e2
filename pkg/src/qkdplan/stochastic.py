"""Poisson-Voronoi backbone: nodes form a Poisson process of intensity
alpha_bb^-2; each user attaches to the nearest node, and traffic between
two users follows the chain of nodes whose Voronoi cells the straight
segment between them crosses.  By stationarity the cost splits into two
geometry constants:

* kappa_loc  - access cost per secret bit per user pair,
               2 E[C(distance to nearest node)]
             = 4 pi int_0^inf C(alpha_bb u) u exp(-pi u^2) du.

* kappa_bb   - trunk cost per secret bit per km of user separation,
               E[sum of C(hop) along the cell chain] / |u - v|, given by
               the Palm-calculus triple integral (in scaled coordinates
               r is a distance in units of alpha_bb, psi and phi are the
               angles subtended at the two hop nodes):

      kappa_bb = (2/alpha_bb) *
          int_{r>0} int_{0<|phi|<=psi<pi}
              C(2 alpha_bb r sin((psi-phi)/2))
              (cos phi - cos psi) r^2 exp(-pi r^2)  dpsi dphi dr.

For the exponential cost C(l) = (c_qkd/R0) exp(l/lambda) the triple
integral collapses (angular reduction, then a Gaussian moment in r) to

      kappa_bb = (c_qkd / (R0 lambda)) * (4/pi) *
                 [ exp(s^-2/pi) (1 + erf(s^-1/sqrt(pi))) + s ],

written here in the scale ratio s = lambda / alpha_bb.  Three independent
evaluation paths of kappa_bb (triple integral, reduced double integral,
closed form) are kept side by side and cross-checked; they must agree to
1e-6 relative or the computation reports failure rather than pick one.

A note on the optimum: the closed-form bracket b(s) = exp(1/(pi s^2))
(1 + erf(1/(s sqrt(pi)))) + s has its minimum at s* ~ 1.2490, i.e. the
trunk cost is minimized when nodes are spaced alpha_bb = lambda / s*
~ 0.8006 lambda (denser than the rate scaling length, trading slightly
more hops for cheaper links).  Both numbers are exposed: s* by
optimal_scale_ratio(), the spacing by optimal_alpha_bb().
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InfeasibleDistanceError, NumericalFailureError, UnsupportedModelError
from .linkmodel import CostParams, LinkModel, binary_entropy, cost_fn
from .numerics import DEFAULT_TOL, GAUSSIAN_TAIL_SPAN, Tolerance, integrate_1d, minimize_1d
from .planar import PlanarScenario, delta_analytic
from .square import CostBreakdown

__all__ = [
    "StochasticBackboneScenario",
    "kappa_loc",
    "kappa_loc_from_cost",
    "kappa_bb_closed_form",
    "kappa_bb_quadrature",
    "kappa_bb_triple_from_cost",
    "kappa_bb_reduced_from_cost",
    "kappa_bb_single_integral",
    "optimal_alpha_bb",
    "optimal_scale_ratio",
    "stochastic_backbone_cost",
    "vector_cost",
]


@dataclass(frozen=True)
class StochasticBackboneScenario:
    """Planar user scenario plus the node spacing parameter alpha_bb (km),
    so the backbone node intensity is alpha_bb^-2."""

    planar: PlanarScenario
    alpha_bb: float

    def __post_init__(self):
        if self.alpha_bb <= 0.0:
            raise ValueError(f"alpha_bb must be > 0, got {self.alpha_bb}")


# ---------------------------------------------------------------------------
# cost-function plumbing
# ---------------------------------------------------------------------------


def vector_cost(
    model: LinkModel,
    costs: CostParams,
    beyond_cutoff_cost: float | None = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Array-valued per-bit cost C(l) for the quadrature engines.

    The BB84 variant has zero rate past its cutoff, so its cost there is
    not defined, and it diverges like 1/(cutoff - l) on approach; by
    default a scenario that integrates over such distances is rejected.
    Passing beyond_cutoff_cost treats that value as the outside option
    (courier, new trench): the per-bit cost is capped at it everywhere,
    which keeps the otherwise non-integrable near-cutoff divergence out
    of the moment integrals.  An explicit modeling choice, not a default.
    """
    lam = model.lambda_qkd
    base = costs.c_qkd / model.r0
    if not model.is_bb84:
        return lambda ell: base * np.exp(np.asarray(ell, dtype=float) / lam)

    if beyond_cutoff_cost is None:
        raise InfeasibleDistanceError(
            "BB84 rate reaches zero at finite distance while the backbone "
            "integrals extend beyond it; pass beyond_cutoff_cost to assign "
            "a penalty to unreachable users"
        )
    if not beyond_cutoff_cost > 0.0 or math.isinf(beyond_cutoff_cost):
        raise ValueError(
            f"beyond_cutoff_cost must be positive and finite, got {beyond_cutoff_cost}"
        )
    a, b = model.bb84_a, model.bb84_b

    def c(ell):
        ell = np.asarray(ell, dtype=float)
        p = a + b * np.exp(ell / lam)
        p_safe = np.clip(p, 1e-300, 0.5)
        h = -p_safe * np.log2(p_safe) - (1.0 - p_safe) * np.log2(1.0 - p_safe)
        fraction = np.maximum(1.0 - 2.0 * h, 0.0)
        rate = model.r0 * np.exp(-ell / lam) * fraction
        with np.errstate(divide="ignore"):
            raw = np.where(rate > 0.0, costs.c_qkd / np.where(rate > 0.0, rate, 1.0),
                           np.inf)
        return np.minimum(raw, beyond_cutoff_cost)

    return c


def _ensure_vectorized(cost: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Accept scalar-only cost callables by wrapping them when needed."""
    probe = np.array([0.25, 0.5])
    try:
        out = np.asarray(cost(probe), dtype=float)
        if out.shape == probe.shape:
            return cost
    except Exception:
        pass
    return np.vectorize(cost, otypes=[float])


def _r_span(vcost, alpha_bb: float) -> float:
    """Truncation radius for the scaled hop-length integrals.

    The integrands carry cost(2 alpha_bb r sin(.)) r^2 exp(-pi r^2); for a
    growing cost the product peaks past the bare Gaussian peak, so the
    truncation rule is: locate the peak for the worst case sin(.) = 1 on a
    scan grid, then add the span where the Gaussian envelope is below
    1e-16 of its peak.
    """
    r = np.linspace(1e-9, 30.0, 3001)
    with np.errstate(over="ignore"):
        vals = vcost(2.0 * alpha_bb * r) * r * r * np.exp(-math.pi * r * r)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    peak = float(r[int(np.argmax(vals))])
    return peak + GAUSSIAN_TAIL_SPAN


# ---------------------------------------------------------------------------
# kappa_loc
# ---------------------------------------------------------------------------


def kappa_loc_from_cost(
    cost: Callable[[float], float],
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Access constant 4 pi int_0^inf cost(alpha_bb u) u exp(-pi u^2) du
    for an arbitrary (scalar) cost function.

    Equals 2 E[cost(|X0|)] where |X0| is the distance from a uniform point
    to the nearest node: P(|X0| > t) = exp(-pi t^2 / alpha_bb^2).
    """
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    vcost = _ensure_vectorized(cost)
    span = _r_span(lambda l: vcost(l / 2.0), alpha_bb)  # integrand uses alpha*u, not 2*alpha*r
    f = lambda u: cost(alpha_bb * u) * u * math.exp(-math.pi * u * u)
    return 4.0 * math.pi * integrate_1d(f, 0.0, span, tol)


def kappa_loc(
    model: LinkModel,
    costs: CostParams,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
    beyond_cutoff_cost: float | None = None,
) -> float:
    """Access cost per secret bit per user pair, 2 E[C(nearest-node distance)].

    The nearest-node distance is unbounded, so the BB84 variant needs an
    explicit beyond_cutoff_cost penalty (see vector_cost); by default such
    scenarios are rejected.
    """
    if model.is_bb84:
        vc = vector_cost(model, costs, beyond_cutoff_cost)
        return kappa_loc_from_cost(lambda l: float(vc(l)), alpha_bb, tol)
    return kappa_loc_from_cost(cost_fn(model, costs), alpha_bb, tol)


# ---------------------------------------------------------------------------
# kappa_bb: three evaluation paths
# ---------------------------------------------------------------------------

_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _composite_gl(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite 8-point Gauss-Legendre rule."""
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + halves[:, None] * _GL8_NODES[None, :]).ravel()
    weights = (halves[:, None] * _GL8_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _converge_panels(evaluate, tol: Tolerance, what: str) -> float:
    """Run `evaluate(panels)` with doubling panel counts until two
    successive estimates agree to tolerance."""
    prev = None
    for panels in (4, 8, 16, 32, 64):
        est = evaluate(panels)
        if prev is not None and abs(est - prev) <= max(tol.abs, tol.rel * abs(est)):
            return est
        prev = est
    raise NumericalFailureError(
        f"{what}: panel doubling did not converge (last estimate {prev})",
        best_estimate=prev,
    )


def kappa_bb_triple_from_cost(
    cost: Callable,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Trunk constant from the full triple integral (module docstring).

    Tensor-product composite Gauss-Legendre quadrature with the hop-length
    variable r innermost (it carries the Gaussian envelope and the declared
    truncation rule); the angular triangle 0 < |phi| <= psi < pi is mapped
    to the rectangle psi in (0, pi), t = phi/psi in (-1, 1).  Panel counts
    double until two successive sweeps agree.  The cost callable should
    accept numpy arrays (scalar callables are wrapped transparently).
    """
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    vcost = _ensure_vectorized(cost)
    r_hi = _r_span(vcost, alpha_bb)

    def sweep(panels: int) -> float:
        r, wr = _composite_gl(0.0, r_hi, panels)
        psi, wpsi = _composite_gl(0.0, math.pi, panels)
        t, wt = _composite_gl(-1.0, 1.0, panels)
        # theta = (psi - phi)/2 with phi = psi t
        theta = 0.5 * psi[:, None] * (1.0 - t[None, :])
        angular = np.cos(psi[:, None] * t[None, :]) - np.cos(psi)[:, None]
        # inner Gaussian moment for every theta, chunked to bound memory
        r_weight = wr * r * r * np.exp(-math.pi * r * r)
        sin_theta = np.sin(theta).ravel()
        g = np.empty_like(sin_theta)
        chunk = 8192
        for k in range(0, sin_theta.size, chunk):
            s = sin_theta[k : k + chunk]
            g[k : k + chunk] = vcost(2.0 * alpha_bb * s[:, None] * r[None, :]) @ r_weight
        g = g.reshape(theta.shape)
        inner_t = (angular * g) @ wt
        total = float((wpsi * psi) @ inner_t)
        return 2.0 / alpha_bb * total

    return _converge_panels(sweep, tol, "trunk-cost triple integral")


def kappa_bb_reduced_from_cost(
    cost: Callable,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Trunk constant from the angular-reduced double integral

        (16/alpha_bb) int_0^{pi/2} int_0^inf
            cost(2 alpha_bb r sin v) sin v r^2 exp(-pi r^2) dr dv.

    Independent evaluation path used to cross-check the triple integral.
    """
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    vcost = _ensure_vectorized(cost)
    r_hi = _r_span(vcost, alpha_bb)

    def sweep(panels: int) -> float:
        r, wr = _composite_gl(0.0, r_hi, panels)
        v, wv = _composite_gl(0.0, math.pi / 2.0, panels)
        r_weight = wr * r * r * np.exp(-math.pi * r * r)
        sv = np.sin(v)
        mat = vcost(2.0 * alpha_bb * sv[:, None] * r[None, :])
        total = float((wv * sv) @ (mat @ r_weight))
        return 16.0 / alpha_bb * total

    return _converge_panels(sweep, tol, "trunk-cost reduced integral")


def kappa_bb_closed_form(model: LinkModel, costs: CostParams, alpha_bb: float) -> float:
    """Closed-form trunk constant for the exponential cost model:

        (c_qkd / (R0 lambda)) * (4/pi) *
        [ exp(a^2/(pi lam^2)) (1 + erf(a/(sqrt(pi) lam))) + lam/a ]

    with a = alpha_bb, lam = lambda_qkd.  Raises UnsupportedModelError for
    other variants (the Gaussian moment only closes for an exponential).
    """
    if model.is_bb84:
        raise UnsupportedModelError(
            "closed-form trunk constant exists only for the exponential rate model"
        )
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    lam = model.lambda_qkd
    x = alpha_bb / lam
    bracket = math.exp(x * x / math.pi) * (1.0 + math.erf(x / math.sqrt(math.pi))) + 1.0 / x
    return (costs.c_qkd / (model.r0 * lam)) * (4.0 / math.pi) * bracket


def kappa_bb_quadrature(
    model: LinkModel,
    costs: CostParams,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
    beyond_cutoff_cost: float | None = None,
) -> float:
    """Trunk constant by direct numerical quadrature of the triple integral.

    For the exponential model the reduced double integral is evaluated as
    well and the two paths must agree to 1e-6 relative; a disagreement is
    reported as a numerical failure instead of silently preferring one.
    Returns the triple-integral value.
    """
    vc = vector_cost(model, costs, beyond_cutoff_cost)
    triple = kappa_bb_triple_from_cost(vc, alpha_bb, tol)
    if not model.is_bb84:
        reduced = kappa_bb_reduced_from_cost(vc, alpha_bb, tol)
        if abs(triple - reduced) > 1e-6 * abs(reduced):
            raise NumericalFailureError(
                f"trunk-constant evaluation paths disagree: triple={triple!r}, "
                f"reduced={reduced!r}",
                best_estimate=triple,
            )
    return triple


def kappa_bb_single_integral(
    model: LinkModel,
    costs: CostParams,
    alpha_bb: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Third evaluation path (exponential model only): the r integration
    carried out analytically, leaving one angular integral

        (c_qkd/(R0 lam)) * [ 2/pi + (4 s/pi) int_0^{pi/2} sin v
            (1 + 2 sin^2 v/(pi s^2)) exp(sin^2 v/(pi s^2))
            (1 + erf(sin v / (sqrt(pi) s))) dv ],   s = lam / alpha_bb.

    Kept as an independent cross-check used by the test suite.
    """
    if model.is_bb84:
        raise UnsupportedModelError(
            "single-integral trunk constant exists only for the exponential rate model"
        )
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    lam = model.lambda_qkd
    s = lam / alpha_bb
    c = 1.0 / (math.pi * s * s)

    def integrand(v: float) -> float:
        sv = math.sin(v)
        return (
            sv
            * (1.0 + 2.0 * sv * sv * c)
            * math.exp(sv * sv * c)
            * (1.0 + math.erf(sv / (math.sqrt(math.pi) * s)))
        )

    integral = integrate_1d(integrand, 0.0, math.pi / 2.0, tol)
    bracket = 2.0 / math.pi + (4.0 * s / math.pi) * integral
    return (costs.c_qkd / (model.r0 * lam)) * bracket


# ---------------------------------------------------------------------------
# optimum and totals
# ---------------------------------------------------------------------------


def optimal_alpha_bb(
    model: LinkModel,
    costs: CostParams,
    tol: Tolerance | None = None,
) -> float:
    """Node spacing minimizing the closed-form trunk constant, found by
    golden-section search on [0.05 lambda, 10 lambda].

    For the exponential model this sits at lambda / s* ~ 0.8006 lambda,
    where s* ~ 1.2490 is the minimizer of the dimensionless bracket in the
    scale ratio s = lambda/alpha_bb (see optimal_scale_ratio); the two
    descriptions are reciprocal views of the same minimum.
    """
    if model.is_bb84:
        raise UnsupportedModelError(
            "optimal spacing uses the closed form, which needs the exponential model"
        )
    lam = model.lambda_qkd
    if tol is None:
        tol = Tolerance(abs=1e-6 * lam, rel=0.0, max_iter=200)
    alpha, _ = minimize_1d(
        lambda a: kappa_bb_closed_form(model, costs, a), 0.05 * lam, 10.0 * lam, tol
    )
    return alpha


def optimal_scale_ratio(tol: Tolerance | None = None) -> float:
    """Minimizer s* of the dimensionless trunk-cost bracket

        b(s) = exp(1/(pi s^2)) (1 + erf(1/(s sqrt(pi)))) + s

    in the scale ratio s = lambda_qkd / alpha_bb; s* ~ 1.2490, a pure
    number independent of every model parameter.  The corresponding node
    spacing is alpha_bb = lambda / s* (= optimal_alpha_bb up to the search
    tolerances).
    """
    if tol is None:
        tol = Tolerance(abs=1e-7, rel=0.0, max_iter=200)

    def bracket(s: float) -> float:
        u = 1.0 / s
        return math.exp(u * u / math.pi) * (1.0 + math.erf(u / math.sqrt(math.pi))) + s

    s_star, _ = minimize_1d(bracket, 0.05, 20.0, tol)
    return s_star


def stochastic_backbone_cost(
    model: LinkModel,
    costs: CostParams,
    sc: StochasticBackboneScenario,
    tol: Tolerance = DEFAULT_TOL,
    beyond_cutoff_cost: float | None = None,
) -> CostBreakdown:
    """Cost breakdown of the Poisson-Voronoi backbone:

        local    = V mu^2 kappa_loc
        backbone = V delta kappa_bb
        nodes    = c_node (L / alpha_bb)^2

    with mu^2 = (L/alpha_u)^4 and delta = gamma L^5 / alpha_u^4 (large-mu
    approximations, kept as such; the exact Poisson second moment is not
    substituted).  kappa_bb uses the closed form when available.
    """
    p = sc.planar
    k_loc = kappa_loc(model, costs, sc.alpha_bb, tol, beyond_cutoff_cost)
    if model.is_bb84:
        k_bb = kappa_bb_quadrature(model, costs, sc.alpha_bb, tol, beyond_cutoff_cost)
    else:
        k_bb = kappa_bb_closed_form(model, costs, sc.alpha_bb)
    mu2 = p.mean_users**2
    return CostBreakdown(
        local=p.volume_v * mu2 * k_loc,
        backbone=p.volume_v * delta_analytic(p) * k_bb,
        nodes=costs.c_node * (p.length_l / sc.alpha_bb) ** 2,
    )
