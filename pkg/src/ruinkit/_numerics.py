"""Small numerical helpers shared by the solvers."""

import math

from .errors import DomainError

_TINY = 1e-300


def ratio_power(num: float, den: float, exponent: float) -> float:
    """(num/den)**exponent via exp/log, with the base clamped away from underflow."""
    if num <= 0 or den <= 0:
        raise DomainError(f"power base must be positive, got {num}/{den}")
    base = max(num / den, _TINY)
    return math.exp(exponent * math.log(base))


def bisect_decreasing(fn, target, lo, hi, tol, maxiter=400):
    """Solve fn(t) = target for a strictly decreasing fn on [lo, hi]."""
    flo, fhi = fn(lo) - target, fn(hi) - target
    if flo < 0 or fhi > 0:
        raise DomainError(f"target {target} outside [{fn(hi)}, {fn(lo)}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid) - target
        if abs(fm) <= tol or hi - lo <= 1e-16 * max(1.0, abs(mid)):
            return mid
        if fm > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
