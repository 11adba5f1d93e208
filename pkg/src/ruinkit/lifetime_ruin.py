"""Minimum probability of lifetime ruin and its linear optimal strategy."""

from __future__ import annotations

import numpy as np

from ._numerics import ratio_power
from .errors import DomainError
from .market import ProblemSpec
from .strategy import Regime, Strategy


def psi(spec: ProblemSpec, w: float, m: float) -> float:
    """Probability of hitting ``spec.x`` before death under the optimal control."""
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    k = spec.consts
    if m <= spec.x:
        return 1.0
    if w >= k.safe:
        return 0.0
    c, r = spec.params.c, spec.params.r
    return ratio_power(c - r * w, c - r * spec.x, k.p)


def pi_psi(spec: ProblemSpec, w: float) -> float:
    k = spec.consts
    if w >= k.safe:
        if w == k.safe:
            return 0.0
        raise DomainError(f"pi_psi is defined for w < c/r = {k.safe}, got {w}")
    return k.xi * (k.safe - w)


def min_wealth_cdf(spec: ProblemSpec, w: float, m: float, y: float) -> float:
    """P(lifetime minimum wealth <= y) when following ``pi_psi``."""
    k = spec.consts
    if w >= k.safe:
        raise DomainError(f"minimum-wealth law degenerates for w >= c/r = {k.safe}")
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    if y >= m:
        return 1.0
    c, r = spec.params.c, spec.params.r
    return ratio_power(c - r * w, c - r * y, k.p)


def psi_strategy(spec: ProblemSpec) -> Strategy:
    """The unconstrained optimal control as a Strategy (exactly linear)."""
    k = spec.consts
    safe = k.safe

    def allocation(w):
        w = np.asarray(w, dtype=float)
        out = np.where(w < safe, k.xi * (safe - w), 0.0)
        return out if out.ndim else float(out)

    def regime(w):
        return Regime.UNCONSTRAINED if w < safe else Regime.ZERO

    nodes = np.array([safe - 1.0, safe])
    return Strategy(
        name="psi",
        allocation=allocation,
        regime=regime,
        domain=(-np.inf, safe),
        nodes=nodes,
        values=k.xi * (safe - nodes),
        linear_slope=k.xi,
    )
