"""Probability of ruin at death, solved through its concave dual.

On [x, c/r) the value is a multiple of the lifetime-ruin probability. Below x
the dual function is D1*y**B1 + D2*y**B2 + (c/r)*y + 1 on [y_x, y_M]; the
free boundaries follow from a scalar equation in the ratio y_x / y_M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._numerics import bisect_decreasing, ratio_power
from .errors import DomainError, ParameterError, RuinkitError
from .market import DerivedConstants, ProblemSpec
from .strategy import Regime, Strategy


@dataclass(frozen=True)
class DualCurve:
    """coeff1*y**B1 + coeff2*y**B2 + linear_slope*y + constant on [y_lo, y_hi]."""

    coeff1: float
    coeff2: float
    linear_slope: float
    constant: float
    y_lo: float
    y_hi: float
    exponents: tuple[float, float]

    def value(self, y):
        b1, b2 = self.exponents
        return self.coeff1 * y**b1 + self.coeff2 * y**b2 + self.linear_slope * y + self.constant

    def d1(self, y):
        b1, b2 = self.exponents
        return (
            self.coeff1 * b1 * y ** (b1 - 1.0)
            + self.coeff2 * b2 * y ** (b2 - 1.0)
            + self.linear_slope
        )

    def d2(self, y):
        b1, b2 = self.exponents
        return self.coeff1 * b1 * (b1 - 1.0) * y ** (b1 - 2.0) + self.coeff2 * b2 * (
            b2 - 1.0
        ) * y ** (b2 - 2.0)

    def primal_w(self, y):
        return self.d1(y)

    def primal_value(self, y):
        return self.value(y) - y * self.d1(y)

    def invert(self, w: float, tol: float = 1e-12) -> float:
        """The dual point y in [y_lo, y_hi] whose primal wealth is ``w``."""
        return bisect_decreasing(self.d1, w, self.y_lo, self.y_hi, tol)


@dataclass(frozen=True)
class RuinAtDeathSolution:
    beta: float
    dual: DualCurve
    spec: ProblemSpec
    ratio: float

    @property
    def y_x(self) -> float:
        return self.dual.y_lo

    @property
    def y_M(self) -> float:
        return self.dual.y_hi


def _ratio_lhs(rho: float, spec: ProblemSpec, k: DerivedConstants) -> float:
    B1, B2 = k.B1, k.B2
    K = k.safe - spec.M
    return (
        K * (B1 * (1.0 - B2) * rho ** (B1 - 1.0) + B2 * (B1 - 1.0) * rho ** (B2 - 1.0)) / (B1 - B2)
    )


def solve_ratio_equation(spec: ProblemSpec, consts: DerivedConstants | None = None) -> float:
    """The unique rho = y_x / y_M in (0, 1) matching the derivative at w = x."""
    k = consts or spec.consts
    M = spec.require_M()
    target = k.safe - spec.x
    if not M < spec.x < k.safe:
        raise ParameterError("need M < x < c/r")

    def f(rho):
        return _ratio_lhs(rho, spec, k) - target

    lo = 0.5
    while f(lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise RuinkitError("could not bracket the boundary-ratio root")
    # f(1) = x - M > 0
    return brentq(f, lo, 1.0, xtol=1e-15, rtol=1e-15, maxiter=500)


def solve_boundaries(spec: ProblemSpec, consts: DerivedConstants | None, rho: float):
    """Return (y_x, y_M, D1, D2, beta) for the boundary ratio ``rho``."""
    k = consts or spec.consts
    B1, B2, p = k.B1, k.B2, k.p
    M, x = spec.require_M(), spec.x
    K = k.safe - M
    rhs = -(p - 1.0) / p * (k.safe - x) + K * (
        (1.0 - B2) * rho ** (B1 - 1.0) + (B1 - 1.0) * rho ** (B2 - 1.0)
    ) / (B1 - B2)
    if not rhs > 0:
        raise ParameterError(f"non-positive reciprocal boundary {rhs}; cannot recover y_x")
    y_x = 1.0 / rhs
    y_M = y_x / rho
    D1 = (1.0 - B2) / (B1 - B2) * (M - k.safe) * y_M ** (1.0 - B1)
    D2 = (B1 - 1.0) / (B1 - B2) * (M - k.safe) * y_M ** (1.0 - B2)
    c, r = spec.params.c, spec.params.r
    beta = c / (r * p) * (1.0 - r * x / c) ** (1.0 - p) * y_x
    return y_x, y_M, D1, D2, beta


def solve_ruin_at_death(spec: ProblemSpec) -> RuinAtDeathSolution:
    k = spec.consts
    rho = solve_ratio_equation(spec, k)
    y_x, y_M, D1, D2, beta = solve_boundaries(spec, k, rho)
    dual = DualCurve(D1, D2, k.safe, 1.0, y_x, y_M, (k.B1, k.B2))
    return RuinAtDeathSolution(beta=beta, dual=dual, spec=spec, ratio=rho)


def boundary_residuals(sol: RuinAtDeathSolution) -> np.ndarray:
    """Residuals of the value/derivative matching conditions at y_x and y_M."""
    spec, d = sol.spec, sol.dual
    k = spec.consts
    y_x, y_M, x, M = d.y_lo, d.y_hi, spec.x, spec.M
    return np.array(
        [
            d.value(y_x) - y_x / k.p * (k.safe + (k.p - 1.0) * x),
            d.d1(y_x) - x,
            d.value(y_M) - (1.0 + M * y_M),
            d.d1(y_M) - M,
        ]
    )


def _outer(sol: RuinAtDeathSolution, w: float) -> float:
    c, r = sol.spec.params.c, sol.spec.params.r
    return sol.beta * ratio_power(c - r * w, c, sol.spec.consts.p)


def phi(sol: RuinAtDeathSolution, w: float, m: float) -> float:
    """Minimum probability that wealth at death is <= x or the minimum hits M."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    spec = sol.spec
    if m <= spec.M:
        return 1.0
    if w >= spec.consts.safe:
        return 0.0
    if w >= spec.x:
        return _outer(sol, w)
    y = sol.dual.invert(w)
    return float(sol.dual.primal_value(y))


def phi_derivatives(sol: RuinAtDeathSolution, w: float) -> tuple[float, float, float]:
    """(phi, phi', phi'') at wealth w in (M, c/r)."""
    spec = sol.spec
    k = spec.consts
    if not spec.M < w < k.safe:
        raise DomainError(f"w={w} outside (M, c/r)")
    if w >= spec.x:
        c, r, p = spec.params.c, spec.params.r, k.p
        base = 1.0 - r * w / c
        return (
            sol.beta * base**p,
            -sol.beta * p * (r / c) * base ** (p - 1.0),
            sol.beta * p * (p - 1.0) * (r / c) ** 2 * base ** (p - 2.0),
        )
    y = sol.dual.invert(w)
    return float(sol.dual.primal_value(y)), -y, -1.0 / float(sol.dual.d2(y))


def _inner_pi(sol: RuinAtDeathSolution, y):
    prm = sol.spec.params
    return (prm.mu - prm.r) / prm.sigma**2 * (-y * sol.dual.d2(y))


def pi_phi(sol: RuinAtDeathSolution, w: float) -> float:
    spec = sol.spec
    k = spec.consts
    # w = M gives the one-sided limit from above
    if not spec.M <= w < k.safe:
        raise DomainError(f"pi_phi is defined on [M, c/r) = [{spec.M}, {k.safe}), got {w}")
    if w >= spec.x:
        return k.xi * (k.safe - w)
    return float(_inner_pi(sol, sol.dual.invert(w)))


def phi_strategy(sol: RuinAtDeathSolution, n: int = 4001) -> Strategy:
    """Optimal control for ruin at death, tabulated parametrically in the dual variable."""
    spec = sol.spec
    k = spec.consts
    ys = np.geomspace(sol.y_x, sol.y_M, n)
    ws = sol.dual.d1(ys)[::-1]
    pis = _inner_pi(sol, ys)[::-1]
    ws[0], ws[-1] = spec.M, spec.x
    nodes = np.concatenate([ws, [spec.x, k.safe]])
    values = np.concatenate([pis, [k.xi * (k.safe - spec.x), 0.0]])

    def allocation(w):
        if w >= k.safe:
            return 0.0
        return pi_phi(sol, w)

    def regime(w):
        return Regime.UNCONSTRAINED if w < k.safe else Regime.ZERO

    return Strategy(
        name="phi",
        allocation=allocation,
        regime=regime,
        domain=(spec.M, k.safe),
        nodes=nodes,
        values=values,
        discontinuities=(spec.x,),
    )
