"""Expected lifetime shortfall and general penalties of the lifetime minimum.

Under the optimal (lifetime-ruin) control the law of the lifetime minimum is
known in closed form, so any penalty f of the minimum can be priced by a single
integral against that law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from scipy.integrate import quad

from ._numerics import ratio_power
from .errors import DomainError, NumericalError
from .lifetime_ruin import pi_psi
from .market import ProblemSpec

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class PenaltyFunction:
    """Bounded, non-increasing, C^1 penalty vanishing on [support_upper, inf).

    ``support_lower`` (may be -inf) is where f' starts to be non-zero and
    ``breakpoints`` lists kinks of f' that the quadrature should not straddle.
    """

    f: Callable[[float], float]
    f_prime: Callable[[float], float]
    support_upper: float
    bound: float
    support_lower: float = -math.inf
    breakpoints: tuple[float, ...] = field(default=())


def _split_points(lo: float, hi: float, breakpoints) -> list[float]:
    pts = {lo, hi}
    pts.update(b for b in breakpoints if lo < b < hi)
    # geometric refinement away from the upper limit: power-law integrands
    span = 1.0
    while hi - span > lo:
        pts.add(hi - span)
        span *= 4.0
    return sorted(pts)


def integrate_pieces(fn, lo: float, hi: float, breakpoints=()) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod over [lo, hi] split at breakpoints; returns (value, abserr)."""
    if hi <= lo:
        return 0.0, 0.0
    pts = _split_points(lo, hi, breakpoints)
    vals, errs = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        v, err, info = quad(
            fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200, full_output=True
        )[:3]
        if err > max(QUAD_EPSABS, QUAD_EPSREL * abs(v)) * 10:
            raise NumericalError(f"quadrature on [{a}, {b}] did not converge", achieved=err)
        vals.append(v)
        errs.append(err)
    return math.fsum(vals), math.fsum(errs)


def value_f(spec: ProblemSpec, pen: PenaltyFunction, w: float, m: float) -> float:
    """Minimum expected penalty f(lifetime minimum) without borrowing constraints."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    k = spec.consts
    fm = pen.f(m)
    if w >= k.safe:
        return fm
    c, r, p = spec.params.c, spec.params.r, k.p
    hi = min(m, pen.support_upper)
    lo = pen.support_lower
    if not math.isfinite(lo):
        # psi(w; y) * bound < TAIL_TOL bounds the neglected part (f monotone)
        lo = (c - (c - r * w) * (pen.bound / TAIL_TOL) ** (1.0 / p)) / r
    lo = min(lo, hi)

    def integrand(y):
        return pen.f_prime(y) * ratio_power(c - r * w, c - r * y, p)

    integral, _ = integrate_pieces(integrand, lo, hi, pen.breakpoints)
    return fm - integral


def value_shortfall(spec: ProblemSpec, w: float, m: float) -> float:
    """Minimum expected lifetime shortfall below ``spec.x`` (closed form)."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    x = spec.x
    k = spec.consts
    gap = max(x - m, 0.0)
    if w >= k.safe:
        return gap
    c, r, p = spec.params.c, spec.params.r, k.p
    level = min(m, x)
    return gap + ratio_power(c - r * w, c - r * level, p) * (c - r * level) / (r * (p - 1.0))


def pi_V(spec: ProblemSpec, w: float) -> float:
    """Optimal control for any penalty of the lifetime minimum: the lifetime-ruin control."""
    return pi_psi(spec, w)


def shortfall_strategy(spec: ProblemSpec):
    """Same control as ``psi_strategy``; only the name differs."""
    from dataclasses import replace

    from .lifetime_ruin import psi_strategy

    return replace(psi_strategy(spec), name="V")
