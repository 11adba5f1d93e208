"""Monte Carlo harness for the wealth equation with exponential death."""

from .harness import (
    DominanceReport,
    EmpiricalCdf,
    LifetimeRuin,
    LifetimeShortfall,
    Objective,
    PathSample,
    RuinAtDeath,
    ShortfallAtDeath,
    SimConfig,
    SimResult,
    ks_distance,
    simulate_min_wealth_cdf,
    simulate_objective,
    simulate_paths,
    strategy_dominance_scan,
)

__all__ = [
    "DominanceReport",
    "EmpiricalCdf",
    "LifetimeRuin",
    "LifetimeShortfall",
    "Objective",
    "PathSample",
    "RuinAtDeath",
    "ShortfallAtDeath",
    "SimConfig",
    "SimResult",
    "ks_distance",
    "simulate_min_wealth_cdf",
    "simulate_objective",
    "simulate_paths",
    "strategy_dominance_scan",
]
