"""Shared numerical kernels: error function, adaptive quadrature,
golden-section minimization and fixed-point iteration.

All routines are pure functions of their inputs and safe to call from any
number of threads.  Every integrand used by the cost modules carries a
Gaussian envelope exp(-pi r^2), so semi-infinite integrals are truncated at
a span where that envelope falls below 1e-16 of its peak (T = 4 is enough;
callers with shifted peaks pass an explicit finite limit instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalFailureError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "GAUSSIAN_TAIL_SPAN",
    "erf",
    "integrate_1d",
    "minimize_1d",
    "fixed_point",
]

# exp(-pi t^2) < 1e-16 for t > sqrt(16 ln 10 / pi) ~ 3.42; rounded up.
GAUSSIAN_TAIL_SPAN = 4.0

# golden ratio conjugate, the interval-reduction factor of golden-section search
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Tolerance:
    """Convergence control for the kernels.

    abs is in the units of the target quantity, rel is dimensionless,
    max_iter bounds the work (panels for quadrature, iterations otherwise).
    """

    abs: float = 1e-10
    rel: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs > 0.0):
            raise ValueError(f"Tolerance.abs must be > 0, got {self.abs}")
        if self.rel < 0.0:
            raise ValueError(f"Tolerance.rel must be >= 0, got {self.rel}")
        if self.max_iter < 1:
            raise ValueError(f"Tolerance.max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


def erf(x: float) -> float:
    """Error function erf(x) = 2/sqrt(pi) * int_0^x exp(-t^2) dt.

    Thin validated wrapper over the C library implementation, which is
    correctly rounded to well below the 1e-12 accuracy this package needs.
    """
    if not math.isfinite(x):
        raise ValueError(f"erf requires finite input, got {x}")
    return math.erf(x)


# 10-point Gauss-Legendre rule on [-1, 1]; exact for polynomials up to
# degree 19, which with panel bisection is plenty for the smooth,
# Gaussian-weighted integrands in this package.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_GL_NODES = _GL_NODES.tolist()
_GL_WEIGHTS = _GL_WEIGHTS.tolist()


def _panel(f: Callable[[float], float], lo: float, hi: float) -> float:
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    acc = 0.0
    for x, w in zip(_GL_NODES, _GL_WEIGHTS):
        acc += w * f(mid + half * x)
    return acc * half


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Integral of f over [a, b] by adaptive interval bisection with a
    fixed-order Gauss-Legendre rule per panel.

    b = inf is accepted and replaced by the declared Gaussian truncation
    span (see module docstring); integrands whose effective support
    extends beyond it must pass an explicit finite b.

    Raises NumericalFailureError (carrying the best estimate) if the panel
    budget is exhausted before every panel meets the local tolerance.
    """
    if not math.isfinite(a):
        raise ValueError(f"lower limit must be finite, got {a}")
    if math.isinf(b) and b > 0:
        b = max(a + 1.0, GAUSSIAN_TAIL_SPAN)
    if not math.isfinite(b):
        raise ValueError(f"upper limit must be finite or +inf, got {b}")
    if not a < b:
        raise ValueError(f"integration limits must satisfy a < b, got [{a}, {b}]")

    width = b - a
    budget = 8 * tol.max_iter
    # stack entries: (lo, hi, coarse estimate for the panel)
    stack = [(a, b, _panel(f, a, b))]
    acc = 0.0
    used = 0
    while stack:
        lo, hi, coarse = stack.pop()
        used += 1
        if used > budget:
            best = acc + coarse + sum(est for _, _, est in stack)
            raise NumericalFailureError(
                f"quadrature did not converge within {budget} panels on [{a}, {b}]",
                best_estimate=best,
            )
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        fine = left + right
        local_abs = tol.abs * (hi - lo) / width
        if abs(fine - coarse) <= max(local_abs, tol.rel * abs(fine)) or (
            hi - lo
        ) <= 1e-14 * width:
            acc += fine
        else:
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
    return acc


def minimize_1d(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[float, float]:
    """Golden-section search for the minimum of a unimodal f on [lo, hi].

    Unimodality is the caller's responsibility; on a non-unimodal f the
    search still terminates but may return a local minimum.  Returns
    (argmin, f(argmin)) with |argmin - true argmin| <= tol.abs for
    unimodal f.
    """
    if not lo < hi:
        raise ValueError(f"minimize_1d requires lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol.abs and it < tol.max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        it += 1
    x = 0.5 * (a + b)
    fx = f(x)
    # guard against a minimum pinned at an endpoint of the original bracket
    for cand, fcand in ((lo, f(lo)), (hi, f(hi))):
        if fcand < fx:
            x, fx = cand, fcand
    return x, fx


def fixed_point(
    g: Callable[[float], float],
    x0: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Solve x = g(x) by direct iteration from x0.

    Assumes g is a contraction near the fixed point.  If plain iteration
    stalls or oscillates, falls back to bisection on h(x) = x - g(x),
    bracketing by doubling expansion around the last iterate.  Returns x
    with |x - g(x)| <= tol.abs; raises NumericalFailureError otherwise.
    """
    x = x0
    prev_residual = math.inf
    worsened = 0
    for _ in range(tol.max_iter):
        gx = g(x)
        residual = abs(x - gx)
        if residual <= tol.abs:
            return x
        if residual >= prev_residual:
            worsened += 1
            if worsened >= 3:
                break  # not contracting; switch to bisection
        prev_residual = residual
        x = gx
    return _bisect_residual(g, x, tol)


def _bisect_residual(g: Callable[[float], float], x_near: float, tol: Tolerance) -> float:
    h = lambda x: x - g(x)
    span = max(1.0, abs(x_near))
    lo = hi = x_near
    flo = fhi = h(x_near)
    for _ in range(60):
        lo, hi = x_near - span, x_near + span
        flo, fhi = h(lo), h(hi)
        # require a genuine sign change: an exact endpoint zero at huge |x|
        # is usually float absorption (x + c == x), not a root
        if math.isfinite(flo) and math.isfinite(fhi) and flo * fhi < 0.0:
            break
        span *= 2.0
    else:
        raise NumericalFailureError(
            f"fixed_point: no sign change of x - g(x) around {x_near}",
            best_estimate=x_near,
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = h(mid)
        if abs(fmid) <= tol.abs:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    raise NumericalFailureError(
        "fixed_point: bisection failed to reach tolerance",
        best_estimate=0.5 * (lo + hi),
    )
