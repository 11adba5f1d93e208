"""Lifetime ruin and lifetime shortfall when borrowing to invest is forbidden.

Between zero wealth and the lending level w_l the constraint binds (pi = w)
and the ruin probability solves

    lam h = (mu w - c) h' + 1/2 sigma^2 w^2 h''

with a Robin condition at w_l. The equation degenerates at w = 0, so it is
integrated backward from w_l with an implicit method; every boundary problem
needed here is a rescaling of that one solution.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import ratio_power
from .errors import DomainError, NumericalError, ParameterError
from .market import MarketParams, NegativeWealthMode, ProblemSpec, derive_constants
from .shortfall import TAIL_TOL, PenaltyFunction, integrate_pieces
from .strategy import Regime, Strategy

INNER_CUTOFF = 1e-6  # fraction of c/r


class NoBorrowCase(enum.Enum):
    CASE1 = "case1"  # x >= w_l, constraint never binds
    CASE2 = "case2"  # 0 <= x < w_l
    CASE3_WELFARE = "case3_welfare"
    CASE3_BORROW = "case3_borrow"


@dataclass(frozen=True)
class ConstrainedOdeBasis:
    """Two solutions of the constrained-band ODE on (0, w_l].

    ``robin`` satisfies h(w_l) = 1 and h/h' = -(c/r - w_l)/p at w_l; ``other``
    has h(w_l) = 0, h'(w_l) = 1. Values below the inner cutoff use the
    first-order expansion forced by the degenerate equation at 0.
    """

    params: MarketParams
    w_l: float
    cutoff: float
    robin: object = field(repr=False)
    other: object = field(repr=False)
    robin_at_zero: float = 0.0
    wronskian: np.ndarray = field(default=None, repr=False)  # rows (w, W / Abel)

    def _eval(self, sol, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 0) or np.any(w > self.w_l * (1 + 1e-12)):
            raise DomainError(f"basis evaluated outside [0, w_l={self.w_l}]")
        wc = np.clip(w, self.cutoff, self.w_l)
        h, dh = sol(wc)
        inner = w < self.cutoff
        if np.any(inner):
            # h(0) from the trapezoid rule with h'(0) = -lam h(0)/c
            lam, c = self.params.lam, self.params.c
            eps = self.cutoff
            h0 = (h - 0.5 * eps * dh) / (1.0 - 0.5 * eps * lam / c)
            dh0 = -lam * h0 / c
            slope = (dh - dh0) / eps
            h = np.where(inner, h0 + dh0 * w + 0.5 * slope * w * w, h)
            dh = np.where(inner, dh0 + slope * w, dh)
        return h, dh

    def h(self, w):
        """Robin solution value."""
        out = self._eval(self.robin, w)[0]
        return out if np.ndim(out) else float(out)

    def dh(self, w):
        out = self._eval(self.robin, w)[1]
        return out if np.ndim(out) else float(out)

    def other_h(self, w):
        out = self._eval(self.other, w)[0]
        return out if np.ndim(out) else float(out)

    def second(self, w):
        """h'' of the Robin solution from the ODE itself (w > 0)."""
        prm = self.params
        h, dh = self._eval(self.robin, w)
        w = np.asarray(w, dtype=float)
        return (prm.lam * h - (prm.mu * w - prm.c) * dh) / (0.5 * prm.sigma**2 * w * w)


@functools.lru_cache(maxsize=32)
def build_basis(params: MarketParams) -> ConstrainedOdeBasis:
    k = derive_constants(params)
    mu, sigma, lam, c = params.mu, params.sigma, params.lam, params.c
    w_l = k.w_l
    cutoff = INNER_CUTOFF * k.safe

    def rhs(w, u):
        return [u[1], (lam * u[0] - (mu * w - c) * u[1]) / (0.5 * sigma * sigma * w * w)]

    def integrate(u0):
        sol = solve_ivp(
            rhs, (w_l, cutoff), u0, method="Radau", rtol=1e-12, atol=1e-14, dense_output=True
        )
        if sol.status != 0:
            raise NumericalError(
                f"constrained-band ODE failed near w=0 (inner cutoff {cutoff}): {sol.message}"
            )
        return sol

    robin = integrate([1.0, -k.p / (k.safe - w_l)])
    other = integrate([0.0, 1.0])
    eps = cutoff
    h_e, dh_e = robin.sol(eps)
    h0 = (h_e - 0.5 * eps * dh_e) / (1.0 - 0.5 * eps * lam / c)

    # Abel: W(w) = W(w_l) exp(int_w^{w_l} P), P = (mu s - c)/(sigma^2 s^2 / 2)
    a2 = 0.5 * sigma * sigma

    def log_abel(w):
        return (mu / a2) * np.log(w_l / w) + (c / a2) * (1.0 / w_l - 1.0 / w)

    nodes = np.linspace(cutoff, w_l, 400)
    nodes = nodes[log_abel(nodes) > -20.0]
    a, da = robin.sol(nodes)
    b, db = other.sol(nodes)
    abel = np.exp(log_abel(nodes))
    wr = a * db - da * b
    slack = 1e-6 * abel + 1e-10 * (np.abs(a * db) + np.abs(da * b))
    if not np.all(np.abs(wr - abel) <= slack):
        raise NumericalError(
            f"constrained-band basis lost independence near w={nodes[np.argmax(np.abs(wr - abel) / slack)]:.3g}"
        )
    wr = wr / abel
    return ConstrainedOdeBasis(
        params=params,
        w_l=w_l,
        cutoff=cutoff,
        robin=robin.sol,
        other=other.sol,
        robin_at_zero=float(h0),
        wronskian=np.column_stack([nodes, wr]),
    )


@dataclass(frozen=True)
class NoBorrowSolution:
    case: NoBorrowCase
    spec: ProblemSpec
    basis: ConstrainedOdeBasis | None
    scale: float  # h_x = scale * basis.h on the constrained band
    beta_x: float

    def h(self, w):
        return self.scale * self.basis.h(w)


def classify(spec: ProblemSpec) -> NoBorrowCase:
    x, w_l = spec.x, spec.consts.w_l
    if x >= w_l:
        return NoBorrowCase.CASE1
    if x >= 0:
        return NoBorrowCase.CASE2
    if spec.mode is None:
        raise ParameterError("x < 0 needs a negative-wealth mode (welfare or borrow)")
    if spec.mode is NegativeWealthMode.WELFARE:
        return NoBorrowCase.CASE3_WELFARE
    return NoBorrowCase.CASE3_BORROW


def solve_psi_nb(spec: ProblemSpec, consts=None) -> NoBorrowSolution:
    """Minimum ruin probability at level ``spec.x`` under pi <= max(0, w)."""
    k = consts or spec.consts
    case = classify(spec)
    c, r, lam, x = spec.params.c, spec.params.r, spec.params.lam, spec.x
    if case in (NoBorrowCase.CASE1, NoBorrowCase.CASE3_WELFARE):
        return NoBorrowSolution(case, spec, None, 0.0, 1.0 if case is NoBorrowCase.CASE1 else 0.0)
    basis = build_basis(spec.params)
    if case is NoBorrowCase.CASE2:
        scale = 1.0 / basis.h(x)
    else:
        scale = (c / (c - r * x)) ** (lam / r) / basis.robin_at_zero
    beta_x = scale * ratio_power(c - r * k.w_l, c - r * x, -k.p)
    return NoBorrowSolution(case, spec, basis, scale, beta_x)


def psi_nb(sol: NoBorrowSolution, w: float, m: float) -> float:
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    spec = sol.spec
    k = spec.consts
    x = spec.x
    c, r = spec.params.c, spec.params.r
    if m <= x:
        return 1.0
    if w >= k.safe:
        return 0.0
    if sol.case is NoBorrowCase.CASE1:
        return ratio_power(c - r * w, c - r * x, k.p)
    if sol.case is NoBorrowCase.CASE3_WELFARE:
        return 0.0
    if w > k.w_l:
        return sol.beta_x * ratio_power(c - r * w, c - r * x, k.p)
    if w > 0:
        return float(sol.h(w))
    # borrow mode, x < m <= w <= 0: riskless drift down to x
    return ratio_power(c - r * w, c - r * x, spec.params.lam / r)


def pi_nb(sol_or_spec, w: float) -> float:
    """Constrained optimal control; the same for every ruin level and both modes."""
    spec = sol_or_spec.spec if isinstance(sol_or_spec, NoBorrowSolution) else sol_or_spec
    k = spec.consts
    if w >= k.safe:
        if w == k.safe:
            return 0.0
        raise DomainError(f"pi_nb is defined for w < c/r = {k.safe}, got {w}")
    if w <= 0:
        return 0.0
    if w <= k.w_l:
        return w
    return k.xi * (k.safe - w)


def nb_regime(spec: ProblemSpec, w: float) -> Regime:
    k = spec.consts
    if w <= 0 or w >= k.safe:
        return Regime.ZERO
    if w <= k.w_l:
        return Regime.FULLY_INVESTED
    return Regime.UNCONSTRAINED


def nb_strategy(spec: ProblemSpec) -> Strategy:
    k = spec.consts
    nodes = np.array([-1.0, 0.0, k.w_l, k.safe])
    values = np.array([0.0, 0.0, k.w_l, 0.0])

    def allocation(w):
        return 0.0 if w >= k.safe else pi_nb(spec, w)

    return Strategy(
        name="nb",
        allocation=allocation,
        regime=lambda w: nb_regime(spec, w),
        domain=(-np.inf, k.safe),
        nodes=nodes,
        values=values,
    )


# -- ruin probability as a function of the ruin level -------------------------


class _LevelPsi:
    """psi_nb(w, m; y) for fixed w and levels y < m (independent of m)."""

    def __init__(self, spec: ProblemSpec, w: float):
        self.spec = spec
        k = spec.consts
        prm = spec.params
        self.c, self.r, self.p, self.q = prm.c, prm.r, k.p, prm.lam / prm.r
        self.w_l, self.w = k.w_l, w
        self.welfare = spec.mode is NegativeWealthMode.WELFARE
        self.basis = build_basis(prm) if w > 0 else None
        c, r = self.c, self.r
        if w > k.w_l:
            self.band = self.basis.h(k.w_l) * ratio_power(c - r * w, c - r * k.w_l, k.p)
        elif w > 0:
            self.band = self.basis.h(w)
        else:
            self.band = None
        # psi_nb(w; 0): start of the negative-level tail for w > 0
        self.at_zero = self.band / self.basis.robin_at_zero if w > 0 else None

    def __call__(self, y: float) -> float:
        c, r, w = self.c, self.r, self.w
        if y >= self.w_l:
            return ratio_power(c - r * w, c - r * y, self.p)
        if y >= 0:
            return self.band / self.basis.h(y)
        if self.welfare:
            return 0.0
        if w <= 0:
            return ratio_power(c - r * w, c - r * y, self.q)
        return self.at_zero * ratio_power(c, c - r * y, self.q)

    def negative_integral(self, b: float) -> float:
        """Integral of psi over (-inf, b] for b <= 0 (borrow mode)."""
        c, r = self.c, self.r
        lam = self.q * r
        if self.welfare:
            return 0.0
        if lam <= r:
            return math.inf
        scale = (c - r * self.w) ** self.q if self.w <= 0 else self.at_zero * c**self.q
        return scale * (c - r * b) ** (1.0 - self.q) / (lam - r)

    def integral(self, lo: float, hi: float) -> float:
        """Integral of psi over [lo, hi] with lo >= 0 (finite levels, no tail)."""
        if hi <= lo:
            return 0.0
        total = []
        a = lo
        if a < min(hi, self.w_l):
            b = min(hi, self.w_l)
            val, _ = integrate_pieces(self.__call__, a, b)
            total.append(val)
            a = b
        if hi > a:
            c, r, p, w = self.c, self.r, self.p, self.w
            total.append(
                (c - r * w) ** p
                * ((c - r * hi) ** (1 - p) - (c - r * a) ** (1 - p))
                / (r * (p - 1))
            )
        return math.fsum(total)


def _need_mode(spec: ProblemSpec) -> NegativeWealthMode:
    if spec.mode is None:
        raise ParameterError("no-borrowing shortfall needs mode 'welfare' or 'borrow'")
    return spec.mode


def value_shortfall_nb(spec: ProblemSpec, w: float, m: float) -> float:
    """Minimum expected lifetime shortfall below ``spec.x`` under pi <= max(0, w)."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    mode = _need_mode(spec)
    x = spec.x
    gap = max(x - m, 0.0)
    if w >= spec.consts.safe:
        return gap
    if mode is NegativeWealthMode.WELFARE and m <= 0:
        return gap
    top = min(m, x)
    level = _LevelPsi(spec, w)
    if mode is NegativeWealthMode.WELFARE:
        return gap + level.integral(0.0, max(top, 0.0))
    neg = level.negative_integral(min(top, 0.0))
    return gap + neg + level.integral(0.0, top)


def value_f_nb(spec: ProblemSpec, pen: PenaltyFunction, w: float, m: float) -> float:
    """Minimum expected penalty of the lifetime minimum under pi <= max(0, w)."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    mode = _need_mode(spec)
    fm = pen.f(m)
    k = spec.consts
    if w >= k.safe:
        return fm
    if mode is NegativeWealthMode.WELFARE and m <= 0:
        return fm
    level = _LevelPsi(spec, w)
    hi = min(m, pen.support_upper)
    if mode is NegativeWealthMode.WELFARE:
        lo = 0.0
    else:
        lo = pen.support_lower
        if not math.isfinite(lo):
            # psi_nb(w; y) <= C (c - r y)^(-lam/r); cut where bound * psi < TAIL_TOL
            c, r, q = level.c, level.r, level.q
            lead = level(min(0.0, hi)) * (c - r * min(0.0, hi)) ** q
            lo = (c - (lead * pen.bound / TAIL_TOL) ** (1.0 / q)) / r
    lo = min(lo, hi)

    def integrand(y):
        return pen.f_prime(y) * level(y)

    bps = tuple(b for b in (*pen.breakpoints, 0.0, k.w_l) if lo < b < hi)
    integral, _ = integrate_pieces(integrand, lo, hi, bps)
    return fm - integral


def min_wealth_cdf_nb(spec: ProblemSpec, w: float, m: float, y: float) -> float:
    """P(lifetime minimum <= y) under ``pi_nb``: the constrained ruin probability at level y."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    _need_mode(spec)
    if y >= m:
        return 1.0
    if w >= spec.consts.safe:
        return 0.0
    if spec.mode is NegativeWealthMode.WELFARE and y < 0 <= w:
        return 0.0
    return float(_LevelPsi(spec, w)(y))
