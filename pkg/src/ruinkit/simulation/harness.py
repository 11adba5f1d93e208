"""Monte Carlo estimates of the four objectives under an arbitrary feedback strategy."""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import kstwo

from ..errors import ConfigError, DomainError, NumericalError
from ..market import NegativeWealthMode, ProblemSpec
from ..strategy import Strategy
from . import _kernel

# numba falls back to another threading layer when TBB is too old; nothing to act on
warnings.filterwarnings("ignore", message="The TBB threading layer")


def _apply_thread_cap():
    raw = os.environ.get("RUINKIT_THREADS")
    if not raw:
        return
    import numba

    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RUINKIT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"RUINKIT_THREADS must be a positive integer, got {raw!r}")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


@dataclass(frozen=True)
class SimConfig:
    paths: int = 200_000
    dt: float = 1.0 / 250.0
    seed: int = 0
    horizon_cap: float | None = None  # years; defaults to 20 / lambda
    antithetic: bool = False
    exact_gbm: bool = True
    bridge: bool = True

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise ConfigError(f"paths must be a positive integer, got {self.paths}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon_cap is not None and not self.horizon_cap > 0:
            raise ConfigError(f"horizon_cap must be positive, got {self.horizon_cap}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")

    def horizon(self, lam: float) -> float:
        return self.horizon_cap if self.horizon_cap is not None else 20.0 / lam


# -- objectives -----------------------------------------------------------------


@dataclass(frozen=True)
class LifetimeRuin:
    x: float
    tag: str = field(default="lifetime_ruin", init=False)
    probability = True

    def absorb_level(self):
        return self.x

    def payoff(self, paths: "PathSample"):
        return (paths.m_end <= self.x).astype(float)


@dataclass(frozen=True)
class RuinAtDeath:
    x: float
    M: float
    tag: str = field(default="ruin_at_death", init=False)
    probability = True

    def absorb_level(self):
        return self.M

    def payoff(self, paths: "PathSample"):
        hit = paths.status == _kernel.RUINED
        return (hit | (paths.w_end <= self.x)).astype(float)


@dataclass(frozen=True)
class LifetimeShortfall:
    x: float
    tag: str = field(default="lifetime_shortfall", init=False)
    probability = False

    def absorb_level(self):
        return -math.inf

    def payoff(self, paths: "PathSample"):
        return np.maximum(self.x - paths.m_end, 0.0)


@dataclass(frozen=True)
class ShortfallAtDeath:
    x: float
    M: float
    tag: str = field(default="shortfall_at_death", init=False)
    probability = False

    def absorb_level(self):
        return self.M

    def payoff(self, paths: "PathSample"):
        hit = paths.status == _kernel.RUINED
        return np.where(hit, self.x - self.M, np.maximum(self.x - paths.w_end, 0.0))


Objective = LifetimeRuin | RuinAtDeath | LifetimeShortfall | ShortfallAtDeath


@dataclass(frozen=True)
class PathSample:
    status: np.ndarray
    m_end: np.ndarray
    w_end: np.ndarray
    tau: np.ndarray
    antithetic: bool

    def __len__(self):
        return self.status.shape[0]


@dataclass(frozen=True)
class SimResult:
    estimate: float
    standard_error: float
    paths_used: int
    objective: str
    analytic_benchmark: float | None = None

    @property
    def z_score(self) -> float | None:
        if self.analytic_benchmark is None:
            return None
        if self.standard_error == 0:
            return 0.0 if self.estimate == self.analytic_benchmark else math.inf
        return (self.estimate - self.analytic_benchmark) / self.standard_error

    def as_record(self) -> dict:
        return {
            "estimate": self.estimate,
            "se": self.standard_error,
            "benchmark": self.analytic_benchmark,
            "z_score": self.z_score,
        }


def _check_dt(spec: ProblemSpec, strategy: Strategy, w: float, cfg: SimConfig):
    prm = spec.params
    safe = spec.consts.safe
    if w >= safe:
        return
    pi = float(strategy.interpolate(w))
    drift = prm.r * w + (prm.mu - prm.r) * pi - prm.c
    if abs(drift) * cfg.dt >= 0.1 * (safe - w):
        raise ConfigError(
            f"dt={cfg.dt} too coarse at w={w}: |drift|*dt={abs(drift) * cfg.dt:.4g} "
            f">= 0.1*(c/r - w)={0.1 * (safe - w):.4g}"
        )


def _floor(spec: ProblemSpec) -> float:
    return 0.0 if spec.mode is NegativeWealthMode.WELFARE else -math.inf


def simulate_paths(
    spec: ProblemSpec,
    strategy: Strategy,
    w: float,
    m: float,
    cfg: SimConfig,
    absorb_level: float = -math.inf,
) -> PathSample:
    """Run the wealth equation per path until death, absorption at c/r, or the ruin level.

    In welfare mode wealth is also stopped at 0. Returns per-path end state.
    """
    if m > w:
        raise DomainError(f"minimum wealth {m} exceeds wealth {w}")
    if spec.mode is NegativeWealthMode.WELFARE and w < 0:
        raise DomainError("welfare mode starts from non-negative wealth")
    _apply_thread_cap()
    prm = spec.params
    exact = cfg.exact_gbm and strategy.linear_slope is not None
    if not exact:
        _check_dt(spec, strategy, w, cfg)
    n = int(cfg.paths)
    if cfg.antithetic and n % 2:
        raise ConfigError("antithetic sampling needs an even number of paths")
    status = np.empty(n, dtype=np.int8)
    m_end = np.empty(n)
    w_end = np.empty(n)
    tau = np.empty(n)
    _kernel.run_paths(
        n,
        float(w),
        float(m),
        prm.mu,
        prm.r,
        prm.sigma,
        prm.c,
        prm.lam,
        np.ascontiguousarray(strategy.nodes, dtype=float),
        np.ascontiguousarray(strategy.values, dtype=float),
        strategy.extrapolate_left == "linear",
        np.asarray(strategy.discontinuities, dtype=float).reshape(-1),
        float(strategy.linear_slope) if exact else math.nan,
        float(cfg.dt),
        float(cfg.horizon(prm.lam)),
        np.uint64(int(cfg.seed)),
        float(absorb_level),
        _floor(spec),
        bool(cfg.antithetic),
        bool(cfg.bridge),
        status,
        m_end,
        w_end,
        tau,
    )
    bad = np.nonzero(status == _kernel.NONFINITE)[0]
    if bad.size:
        i = int(bad[0])
        raise NumericalError(
            f"non-finite wealth on {bad.size} path(s); first is path {i} "
            f"(seed={cfg.seed}, death time {tau[i]:.6g}, running min {m_end[i]:.6g})"
        )
    return PathSample(status, m_end, w_end, tau, bool(cfg.antithetic))


def _mean_se(values: np.ndarray, antithetic: bool) -> tuple[float, float]:
    units = values.reshape(-1, 2).mean(axis=1) if antithetic else values
    n = units.shape[0]
    mean = float(np.mean(units))
    se = float(np.std(units, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def simulate_objective(
    spec: ProblemSpec,
    strategy: Strategy,
    objective: Objective,
    cfg: SimConfig,
    w: float,
    m: float | None = None,
    benchmark: float | None = None,
) -> SimResult:
    m = w if m is None else m
    paths = simulate_paths(spec, strategy, w, m, cfg, objective.absorb_level())
    est, se = _mean_se(objective.payoff(paths), paths.antithetic)
    return SimResult(est, se, len(paths), objective.tag, benchmark)


# -- law of the lifetime minimum ------------------------------------------------


@dataclass(frozen=True)
class EmpiricalCdf:
    y: np.ndarray
    cdf: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    samples: np.ndarray  # sorted lifetime minima
    ks_distance: float | None = None
    ks_critical: float | None = None

    @property
    def ks_pass(self) -> bool | None:
        if self.ks_distance is None:
            return None
        return self.ks_distance < self.ks_critical


def ks_distance(samples: np.ndarray, cdf, atom: float | None = None) -> float:
    """Sup distance between the empirical law of ``samples`` and ``cdf``.

    ``cdf`` must be continuous below ``atom`` and equal 1 from ``atom`` on
    (samples equal to ``atom`` form the point mass).
    """
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.shape[0]
    cont = s if atom is None else s[s < atom]
    k = cont.shape[0]
    if k == 0:
        d = 0.0
    else:
        f = np.asarray([cdf(v) for v in cont])
        i = np.arange(1, k + 1)
        d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    if atom is not None:
        left = cdf(np.nextafter(atom, -np.inf))
        d = max(d, abs(k / n - left))
    return d


def simulate_min_wealth_cdf(
    spec: ProblemSpec,
    strategy: Strategy,
    w: float,
    m: float,
    y_grid: Sequence[float],
    cfg: SimConfig,
    reference=None,
    alpha: float = 0.01,
) -> EmpiricalCdf:
    """Empirical CDF of the lifetime minimum with DKW bands; optional KS test vs ``reference(y)``."""
    paths = simulate_paths(spec, strategy, w, m, cfg)
    samples = np.sort(paths.m_end)
    n = samples.shape[0]
    y = np.asarray(y_grid, dtype=float)
    cdf = np.searchsorted(samples, y, side="right") / n
    eps = math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
    lower, upper = np.clip(cdf - eps, 0, 1), np.clip(cdf + eps, 0, 1)
    dist = crit = None
    if reference is not None:
        dist = ks_distance(samples, reference, atom=m)
        crit = float(kstwo.ppf(1.0 - alpha, n))
    return EmpiricalCdf(y, cdf, lower, upper, samples, dist, crit)


# -- comparisons under common random numbers -------------------------------------


@dataclass(frozen=True)
class DominanceEntry:
    name: str
    estimate: float
    standard_error: float
    diff: float | None  # perturbed - base
    diff_se: float | None
    beats_base: bool
    rejected: str | None = None


@dataclass(frozen=True)
class DominanceReport:
    objective: str
    base: DominanceEntry
    entries: tuple[DominanceEntry, ...]

    @property
    def any_beats_base(self) -> bool:
        return any(e.beats_base for e in self.entries)

    def lines(self) -> list[str]:
        out = [f"{self.base.name}: {self.base.estimate:.6g} +- {self.base.standard_error:.3g}"]
        for e in self.entries:
            if e.rejected:
                out.append(f"{e.name}: rejected ({e.rejected})")
            else:
                out.append(
                    f"{e.name}: {e.estimate:.6g} +- {e.standard_error:.3g}, "
                    f"diff {e.diff:+.4g} +- {e.diff_se:.3g}{'  BEATS BASE' if e.beats_base else ''}"
                )
        return out


def strategy_dominance_scan(
    spec: ProblemSpec,
    objective: Objective,
    base: Strategy,
    perturbed: Sequence[Strategy],
    w: float,
    m: float,
    cfg: SimConfig,
    feasibility: tuple[float, float] | None = None,
    threshold: float = 3.0,
) -> DominanceReport:
    """Evaluate every strategy on the same random numbers; flag any that beat ``base``.

    With ``feasibility=(lo, hi)`` strategies violating pi <= max(0, w) on that
    range are rejected without being simulated.
    """
    # mixing exact and Euler steps would compare different discretizations
    cfg_all = (
        cfg
        if base.linear_slope is not None and all(s.linear_slope is not None for s in perturbed)
        else SimConfig(**{**cfg.__dict__, "exact_gbm": False})
    )

    def run(s):
        paths = simulate_paths(spec, s, w, m, cfg_all, objective.absorb_level())
        return objective.payoff(paths)

    base_pay = run(base)
    b_est, b_se = _mean_se(base_pay, cfg.antithetic)
    base_entry = DominanceEntry(base.name, b_est, b_se, None, None, False)
    entries = []
    for s in perturbed:
        if feasibility is not None and not s.is_feasible_no_borrow(*feasibility):
            entries.append(
                DominanceEntry(s.name, math.nan, math.nan, None, None, False, "infeasible")
            )
            continue
        pay = run(s)
        est, se = _mean_se(pay, cfg.antithetic)
        diff, diff_se = _mean_se(pay - base_pay, cfg.antithetic)
        entries.append(DominanceEntry(s.name, est, se, diff, diff_se, diff < -threshold * diff_se))
    return DominanceReport(objective.tag, base_entry, tuple(entries))
