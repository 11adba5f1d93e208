"""Expected shortfall at death: closed form above x, free-boundary shooting below.

Below x the dual value is Uh(y) + (c/r) y - (c/r - x), where Uh solves

    lam*Uh + ((r - lam) y + lam) Uh' - delta y^2 Uh'' = 0

between the unknown dual boundaries y_x < y_M. Given y_x, both Uh and Uh' are
known there, so we integrate upward, stop where Uh' = M - c/r, and root-find
the remaining value mismatch over y_x.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ._numerics import bisect_decreasing, ratio_power
from .errors import DomainError, NumericalError, ParameterError, SolverError
from .market import DerivedConstants, ProblemSpec
from .strategy import Regime, Strategy

log = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
Y_FLOOR = 1e-8
Y_CAP = 2.0**30


@dataclass(frozen=True)
class ShootingSolution:
    y_x: float
    y_M: float
    grid: np.ndarray  # rows (y, Uh, Uh')
    beta: float
    spec: ProblemSpec
    dense: object = field(repr=False)
    brackets_found: int = 1

    def uh(self, y):
        return self.dense(y)[0]

    def uh_prime(self, y):
        return self.dense(y)[1]

    def uh_second(self, y):
        k = self.spec.consts
        lam, r = self.spec.params.lam, self.spec.params.r
        u, du = self.dense(y)
        return (lam * u + ((r - lam) * y + lam) * du) / (k.delta * y * y)

    def wealth(self, y):
        return self.uh_prime(y) + self.spec.consts.safe

    def dual_value(self, y):
        k = self.spec.consts
        return self.uh(y) + k.safe * y - (k.safe - self.spec.x)

    def invert(self, w: float, tol: float = 1e-12) -> float:
        return bisect_decreasing(lambda y: float(self.wealth(y)), w, self.y_x, self.y_M, tol)


def _rhs(consts: DerivedConstants, r: float, lam: float):
    delta = consts.delta

    def rhs(y, u):
        return [u[1], (lam * u[0] + ((r - lam) * y + lam) * u[1]) / (delta * y * y)]

    return rhs


def _initial(spec: ProblemSpec, y_x: float):
    k = spec.consts
    return [(k.safe - spec.x) * (1.0 - (k.p - 1.0) / k.p * y_x), spec.x - k.safe]


def _shoot(spec: ProblemSpec, y_x: float, dense: bool = False):
    """Integrate from y_x to the event Uh' = M - c/r. Returns (y_M, mismatch, ode) or None."""
    k = spec.consts
    M = spec.M
    prm = spec.params
    target = M - k.safe

    def event(y, u):
        return u[1] - target

    event.terminal = True
    event.direction = -1
    sol = solve_ivp(
        _rhs(k, prm.r, prm.lam),
        (y_x, y_x * 1e6 + 10.0),
        _initial(spec, y_x),
        method="RK45",
        rtol=RTOL,
        atol=ATOL,
        events=event,
        dense_output=dense,
    )
    if sol.status == -1:
        raise NumericalError(f"shooting integration failed at y_x={y_x}: {sol.message}")
    if sol.t_events[0].size == 0:
        return None
    y_M = float(sol.t_events[0][0])
    uh_M = float(sol.y_events[0][0][0])
    return y_M, uh_M - (k.safe - M) * (1.0 - y_M), sol


def shooting_residual(spec: ProblemSpec, y_x: float) -> float:
    out = _shoot(spec, y_x)
    return np.nan if out is None else out[1]


def solve_U(
    spec: ProblemSpec, consts: DerivedConstants | None = None, scan_points: int = 60
) -> ShootingSolution:
    """Free boundaries (y_x, y_M) and the dual solution on [y_x, y_M]."""
    M = spec.require_M()
    k = consts or spec.consts
    if not M < spec.x < k.safe:
        raise ParameterError("need M < x < c/r")

    trace = []
    lo, f_lo = Y_FLOOR, shooting_residual(spec, Y_FLOOR)
    trace.append((lo, f_lo))
    hi = 1.0
    while True:
        f_hi = shooting_residual(spec, hi)
        trace.append((hi, f_hi))
        if np.isfinite(f_hi) and np.sign(f_hi) != np.sign(f_lo):
            break
        hi *= 2.0
        if hi > Y_CAP:
            raise SolverError("shooting residual never changed sign", trace=trace)

    ys = np.geomspace(lo, hi, scan_points)
    vals = np.array([shooting_residual(spec, y) for y in ys])
    trace.extend(zip(ys.tolist(), vals.tolist()))
    ok = np.isfinite(vals)
    ys, vals = ys[ok], vals[ok]
    changes = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if changes.size == 0:
        raise SolverError("no bracketed sign change in shooting residual", trace=trace)
    if changes.size > 1:
        log.warning("shooting residual has %d sign changes; using the first", changes.size)
    i = changes[0]
    y_x = brentq(
        lambda y: shooting_residual(spec, y),
        ys[i],
        ys[i + 1],
        xtol=1e-15,
        rtol=1e-15,
        maxiter=300,
    )

    y_M, _, ode = _shoot(spec, y_x, dense=True)
    grid = np.column_stack([ode.t, ode.y[0], ode.y[1]])
    c, r, p = spec.params.c, spec.params.r, k.p
    beta = c / (r * p) * (1.0 - r * spec.x / c) ** (1.0 - p) * y_x
    return ShootingSolution(
        y_x=float(y_x),
        y_M=y_M,
        grid=grid,
        beta=beta,
        spec=spec,
        dense=ode.sol,
        brackets_found=int(changes.size),
    )


def boundary_residuals(sol: ShootingSolution) -> np.ndarray:
    """Value/derivative conditions of Uh at y_x and y_M."""
    spec = sol.spec
    k = spec.consts
    x, M = spec.x, spec.M
    u_x, du_x = sol.dense(sol.y_x)
    u_M, du_M = sol.dense(sol.y_M)
    return np.array(
        [
            u_x - (k.safe - x) * (1.0 - (k.p - 1.0) / k.p * sol.y_x),
            du_x - (x - k.safe),
            u_M - (k.safe - M) * (1.0 - sol.y_M),
            du_M - (M - k.safe),
        ]
    )


def U_value(sol: ShootingSolution, spec: ProblemSpec, w: float, m: float) -> float:
    """Minimum expected shortfall of wealth at death below x (frozen at x - M once M is hit)."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    k = spec.consts
    if m <= spec.M:
        return spec.x - spec.M
    if w >= k.safe:
        return 0.0
    if w >= spec.x:
        c, r = spec.params.c, spec.params.r
        return sol.beta * ratio_power(c - r * w, c, k.p)
    y = sol.invert(w)
    return float(sol.dual_value(y) - w * y)


def U_derivatives(sol: ShootingSolution, w: float) -> tuple[float, float, float]:
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
    y = sol.invert(w)
    return float(sol.dual_value(y) - w * y), -y, -1.0 / float(sol.uh_second(y))


def _inner_pi(sol: ShootingSolution, y):
    prm = sol.spec.params
    return (prm.mu - prm.r) / prm.sigma**2 * (-y * sol.uh_second(y))


def pi_U(sol: ShootingSolution, spec: ProblemSpec, w: float) -> float:
    k = spec.consts
    # w = M gives the one-sided limit from above
    if not spec.M <= w < k.safe:
        raise DomainError(f"pi_U is defined on [M, c/r) = [{spec.M}, {k.safe}), got {w}")
    if w >= spec.x:
        return k.xi * (k.safe - w)
    return float(_inner_pi(sol, sol.invert(w)))


def g_minus_z(sol: ShootingSolution, y):
    """Uh/Uh' - ((p-1)/p y - 1); positive inside (y_x, y_M) when pi_U exceeds pi_psi."""
    p = sol.spec.consts.p
    u, du = sol.dense(y)
    return u / du - ((p - 1.0) / p * y - 1.0)


def U_strategy(sol: ShootingSolution, n: int = 4001) -> Strategy:
    spec = sol.spec
    k = spec.consts
    ys = np.geomspace(sol.y_x, sol.y_M, n)
    ws = sol.wealth(ys)[::-1]
    pis = _inner_pi(sol, ys)[::-1]
    ws[0], ws[-1] = spec.M, spec.x
    nodes = np.concatenate([ws, [spec.x, k.safe]])
    values = np.concatenate([pis, [k.xi * (k.safe - spec.x), 0.0]])

    def allocation(w):
        if w >= k.safe:
            return 0.0
        return pi_U(sol, spec, w)

    def regime(w):
        return Regime.UNCONSTRAINED if w < k.safe else Regime.ZERO

    return Strategy(
        name="U",
        allocation=allocation,
        regime=regime,
        domain=(spec.M, k.safe),
        nodes=nodes,
        values=values,
    )
