"""Secret-key rate curve R(l) of a single QKD link and the derived
per-bit cost C(l) = C_qkd / R(l).

Two rate variants are supported:

* pure exponential: R(l) = R0 exp(-l / lambda_qkd), the linear region of
  the log-rate curve.  lambda_qkd = 10 / (alpha r ln 10) follows from a
  channel attenuation of alpha dB/km and a security-proof rate scaling
  eta^r in the channel transmission eta.
* BB84 with dark counts: the same envelope multiplied by the secret
  fraction max(0, 1 - 2 h(p)) with error rate p(l) = a + b exp(l / lambda),
  which collapses multi-exponentially once dark counts dominate.  This is
  the variant used for the log-concavity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import InfeasibleDistanceError

__all__ = [
    "AttenuationSpec",
    "LinkModel",
    "CostParams",
    "ConcavityReport",
    "ENTROPY_CUTOFF",
    "binary_entropy",
    "lambda_from_attenuation",
    "drop_distance",
    "rate",
    "per_bit_cost",
    "cost_fn",
    "check_log_concavity",
]


def binary_entropy(p: float) -> float:
    """Binary entropy h(p) in bits; h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy requires p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_cutoff() -> float:
    # root of 1 - 2 h(p) on (0, 1/2): error rate where the secret fraction
    # of the BB84 toy model reaches zero
    lo, hi = 1e-12, 0.5 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - 2.0 * binary_entropy(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


ENTROPY_CUTOFF = _entropy_cutoff()  # ~0.1100278644


@dataclass(frozen=True)
class AttenuationSpec:
    """Channel and detector parameters that fix the rate-curve scales.

    alpha_db_per_km: fibre attenuation alpha (dB/km).
    r_exponent: power r of the channel transmission in the key rate
        (r = 1 for ideal single-photon BB84, r = 2 for weak coherent pulses).
    eta_d: detector efficiency.
    p_d: dark-count probability per detection gate; must be below eta_d
        for the rate drop-off distance to be meaningful.
    """

    alpha_db_per_km: float
    r_exponent: float = 1.0
    eta_d: float = 0.1
    p_d: float = 1e-7

    def __post_init__(self):
        if self.alpha_db_per_km <= 0.0:
            raise ValueError(f"alpha_db_per_km must be > 0, got {self.alpha_db_per_km}")
        if self.r_exponent <= 0.0:
            raise ValueError(f"r_exponent must be > 0, got {self.r_exponent}")
        if not 0.0 < self.eta_d <= 1.0:
            raise ValueError(f"eta_d must be in (0, 1], got {self.eta_d}")
        if not 0.0 < self.p_d < self.eta_d:
            raise ValueError(
                f"p_d must satisfy 0 < p_d < eta_d, got p_d={self.p_d}, eta_d={self.eta_d}"
            )


@dataclass(frozen=True)
class LinkModel:
    """Rate-curve parameters of one QKD link.

    r0 is the zero-distance rate R0 (bit/s), lambda_qkd the exponential
    scaling length (km).  bb84_a / bb84_b, when both set, select the BB84
    dark-count variant with error rate p(l) = a + b exp(l / lambda);
    a + b < 1/2 is required so the error rate starts below 1/2.  A
    positive rate at l = 0 additionally needs a + b below ENTROPY_CUTOFF
    (~0.110); models above it have zero rate everywhere.
    """

    r0: float
    lambda_qkd: float
    bb84_a: float | None = None
    bb84_b: float | None = None

    def __post_init__(self):
        if self.r0 <= 0.0:
            raise ValueError(f"r0 must be > 0, got {self.r0}")
        if self.lambda_qkd <= 0.0:
            raise ValueError(f"lambda_qkd must be > 0, got {self.lambda_qkd}")
        if (self.bb84_a is None) != (self.bb84_b is None):
            raise ValueError("bb84_a and bb84_b must be given together")
        if self.bb84_a is not None:
            if self.bb84_a < 0.0:
                raise ValueError(f"bb84_a must be >= 0, got {self.bb84_a}")
            if self.bb84_b <= 0.0:
                raise ValueError(f"bb84_b must be > 0, got {self.bb84_b}")
            if self.bb84_a + self.bb84_b >= 0.5:
                raise ValueError("bb84 error-rate parameters must satisfy a + b < 1/2")

    @classmethod
    def exponential(cls, r0: float, lambda_qkd: float) -> "LinkModel":
        return cls(r0=r0, lambda_qkd=lambda_qkd)

    @classmethod
    def bb84(cls, r0: float, lambda_qkd: float, a: float, b: float) -> "LinkModel":
        return cls(r0=r0, lambda_qkd=lambda_qkd, bb84_a=a, bb84_b=b)

    @property
    def is_bb84(self) -> bool:
        return self.bb84_a is not None

    @property
    def variant(self) -> str:
        return "bb84" if self.is_bb84 else "exponential"

    def cutoff_distance(self) -> float:
        """Distance where the rate reaches zero.

        Infinite for the pure exponential variant.  For BB84 it is the
        distance where p(l) hits the entropy cutoff; zero if the model
        starts at or above the cutoff.
        """
        if not self.is_bb84:
            return math.inf
        if self.bb84_a >= ENTROPY_CUTOFF:
            return 0.0
        return self.lambda_qkd * math.log((ENTROPY_CUTOFF - self.bb84_a) / self.bb84_b)


@dataclass(frozen=True)
class CostParams:
    """Unit equipment costs: c_qkd per QKD link pair, c_node per node."""

    c_qkd: float
    c_node: float = 0.0

    def __post_init__(self):
        if self.c_qkd <= 0.0:
            raise ValueError(f"c_qkd must be > 0, got {self.c_qkd}")
        if self.c_node < 0.0:
            raise ValueError(f"c_node must be >= 0, got {self.c_node}")


def lambda_from_attenuation(spec: AttenuationSpec) -> float:
    """Scaling length lambda_qkd = 10 / (alpha r ln 10) in km.

    Follows from R ~ eta^r with transmission eta = 10^(-alpha l / 10):
    writing eta^r = exp(-l / lambda) gives this lambda.
    """
    return 10.0 / (spec.alpha_db_per_km * spec.r_exponent * math.log(10.0))


def drop_distance(spec: AttenuationSpec, lambda_qkd: float) -> float:
    """Distance lambda * ln(eta_d / p_d) where dark counts overtake signal.

    Beyond it the rate collapses multi-exponentially, so it bounds the
    practical link span.  Note this raw formula value can exceed quoted
    field figures, which fold in losses the model omits.
    """
    if spec.p_d >= spec.eta_d:
        raise ValueError("drop distance undefined for p_d >= eta_d")
    if lambda_qkd <= 0.0:
        raise ValueError(f"lambda_qkd must be > 0, got {lambda_qkd}")
    return lambda_qkd * math.log(spec.eta_d / spec.p_d)


def rate(model: LinkModel, ell: float) -> float:
    """Secret-key rate R(l) in bit/s; 0 where the link cannot make key."""
    if ell < 0.0:
        raise ValueError(f"distance must be >= 0, got {ell}")
    envelope = model.r0 * math.exp(-ell / model.lambda_qkd)
    if not model.is_bb84:
        return envelope
    p = model.bb84_a + model.bb84_b * math.exp(ell / model.lambda_qkd)
    if p >= 0.5:
        return 0.0
    fraction = 1.0 - 2.0 * binary_entropy(p)
    return envelope * max(0.0, fraction)


def per_bit_cost(model: LinkModel, costs: CostParams, ell: float) -> float:
    """Per-bit cost C(l) = c_qkd / R(l) of one unit of key rate at distance l."""
    r = rate(model, ell)
    if r <= 0.0:
        raise InfeasibleDistanceError(
            f"zero secret-key rate at distance {ell} (cutoff "
            f"{model.cutoff_distance():.6g}); no finite per-bit cost"
        )
    return costs.c_qkd / r


def cost_fn(model: LinkModel, costs: CostParams) -> Callable[[float], float]:
    """The map l -> C(l), for handing to generic quadrature/MC engines."""
    return lambda ell: per_bit_cost(model, costs, ell)


@dataclass(frozen=True)
class ConcavityReport:
    """Outcome of a discrete midpoint concavity check on log R."""

    passed: bool
    worst_second_difference: float  # positive value = worst violation
    slack: float
    points: int

    def __bool__(self) -> bool:
        return self.passed


def check_log_concavity(model: LinkModel, lo: float, hi: float, n: int) -> ConcavityReport:
    """Check that log R(l) is concave on [lo, hi] via second differences.

    Evaluates log R on n equally spaced points; concavity requires every
    second difference y[i-1] - 2 y[i] + y[i+1] <= slack, where the slack
    absorbs pure floating-point noise (1e-9 relative to max |log R|).
    """
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    ys = []
    for x in xs:
        r = rate(model, x)
        if r <= 0.0:
            raise InfeasibleDistanceError(
                f"rate is zero at {x}; log-concavity check needs a positive rate"
            )
        ys.append(math.log(r))
    slack = 1e-9 * max(abs(y) for y in ys)
    worst = -math.inf
    for i in range(1, n - 1):
        second = ys[i - 1] - 2.0 * ys[i] + ys[i + 1]
        worst = max(worst, second)
    return ConcavityReport(
        passed=worst <= slack,
        worst_second_difference=worst,
        slack=slack,
        points=n,
    )
