"""Investment strategies: wealth -> dollars held in the risky asset."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError


class Regime(enum.Enum):
    UNCONSTRAINED = "unconstrained"
    FULLY_INVESTED = "fully_invested"
    ZERO = "zero"


@dataclass(frozen=True)
class Strategy:
    """A feedback control together with a piecewise-linear table of it.

    ``allocation`` is the exact map; ``nodes``/``values`` tabulate it for the
    simulator (repeated nodes encode jumps, the right-hand value wins at the
    node itself). ``linear_slope`` is set when allocation(w) equals
    slope * (c/r - w) on the whole domain, which enables exact lognormal paths.
    """

    name: str
    allocation: Callable[[float], float]
    regime: Callable[[float], Regime]
    domain: tuple[float, float]
    nodes: np.ndarray
    values: np.ndarray
    discontinuities: tuple[float, ...] = ()
    linear_slope: float | None = None
    extrapolate_left: str = "linear"

    def __call__(self, w: float) -> float:
        return self.allocation(w)

    def one_sided(self, w: float, eps: float = 1e-6) -> tuple[float, float]:
        """Allocation just left and just right of ``w``."""
        return self.allocation(w - eps), self.allocation(w + eps)

    def interpolate(self, w):
        """Evaluate the tabulated (simulator) version of the strategy."""
        return table_lookup(
            self.nodes, self.values, np.asarray(w, dtype=float), self.extrapolate_left == "linear"
        )

    def scaled(self, factor: float, shift: float = 0.0, name: str | None = None) -> "Strategy":
        """factor * allocation + shift, e.g. for perturbation scans."""
        base = self.allocation
        slope = None
        if self.linear_slope is not None and shift == 0.0:
            slope = factor * self.linear_slope
        return Strategy(
            name=name or f"{factor:g}*{self.name}" + (f"+{shift:g}" if shift else ""),
            allocation=lambda w: factor * base(w) + shift,
            regime=lambda w: Regime.UNCONSTRAINED,
            domain=self.domain,
            nodes=self.nodes.copy(),
            values=factor * self.values + shift,
            discontinuities=self.discontinuities,
            linear_slope=slope,
            extrapolate_left=self.extrapolate_left,
        )

    def is_feasible_no_borrow(self, lo: float, hi: float, n: int = 2001, tol: float = 1e-9) -> bool:
        """Check pi(w) <= max(0, w) on a grid plus all table nodes inside [lo, hi]."""
        grid = np.linspace(lo, hi, n)
        inside = self.nodes[(self.nodes >= lo) & (self.nodes <= hi)]
        grid = np.concatenate([grid, inside])
        vals = self.interpolate(grid)
        return bool(np.all(vals <= np.maximum(0.0, grid) + tol))


def table_lookup(nodes, values, w, linear_left=True):
    idx = np.searchsorted(nodes, w, side="right")
    out = np.empty_like(w, dtype=float)
    n = len(nodes)
    left = idx == 0
    right = idx >= n
    mid = ~(left | right)
    i = idx[mid]
    x0, x1 = nodes[i - 1], nodes[i]
    y0, y1 = values[i - 1], values[i]
    out[mid] = y0 + (y1 - y0) * (w[mid] - x0) / (x1 - x0)
    if linear_left and n > 1:
        slope = (values[1] - values[0]) / (nodes[1] - nodes[0])
        out[left] = values[0] + slope * (w[left] - nodes[0])
    else:
        out[left] = values[0]
    out[right] = values[-1]
    return out if out.ndim else float(out)


def from_table(
    nodes: Sequence[float],
    values: Sequence[float],
    name: str = "table",
    extrapolate_left: str = "constant",
) -> Strategy:
    """Piecewise-linear strategy from sampled (w, pi) pairs."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
        raise DomainError("strategy table needs matching 1-d node/value arrays with >= 2 rows")
    if np.any(np.diff(nodes) < 0):
        raise DomainError("strategy table nodes must be non-decreasing")
    if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
        raise DomainError("strategy table contains non-finite entries")
    jumps = tuple(float(v) for v in nodes[1:][np.diff(nodes) == 0])
    linear = extrapolate_left == "linear"
    return Strategy(
        name=name,
        allocation=lambda w: table_lookup(nodes, values, np.asarray(w, dtype=float), linear),
        regime=lambda w: Regime.UNCONSTRAINED,
        domain=(-np.inf, float(nodes[-1])),
        nodes=nodes,
        values=values,
        discontinuities=jumps,
        extrapolate_left=extrapolate_left,
    )


def load_strategy_csv(path) -> Strategy:
    """Read a two-column ``w,pi`` CSV (an optional header row is skipped)."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                w, pi = float(parts[0]), float(parts[1])
            except (ValueError, IndexError):
                if lineno == 1 and not rows:
                    continue
                raise DomainError(f"{path}:{lineno}: expected two numeric columns") from None
            rows.append((w, pi))
    arr = np.array(rows, dtype=float)
    if arr.size == 0:
        raise DomainError(f"{path}: no strategy rows")
    return from_table(arr[:, 0], arr[:, 1], name=str(path))
