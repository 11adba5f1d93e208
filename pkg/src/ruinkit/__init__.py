"""Optimal investment to minimize lifetime ruin, ruin at death and shortfall objectives.

The simulator lives in ``ruinkit.simulation`` and is imported lazily because it
compiles its kernel on first use.
"""

from .errors import (
    ConfigError,
    DomainError,
    NumericalError,
    ParameterError,
    RuinkitError,
    SolverError,
)
from .lifetime_ruin import min_wealth_cdf, pi_psi, psi, psi_strategy
from .market import (
    EXAMPLE_PARAMS,
    EXAMPLE_SPEC,
    DerivedConstants,
    MarketParams,
    NegativeWealthMode,
    ProblemSpec,
    derive_constants,
    load_spec,
    parse_config,
)
from .no_borrow import (
    NoBorrowCase,
    NoBorrowSolution,
    nb_strategy,
    pi_nb,
    psi_nb,
    solve_psi_nb,
    value_f_nb,
    value_shortfall_nb,
)
from .ruin_at_death import (
    DualCurve,
    RuinAtDeathSolution,
    phi,
    phi_strategy,
    pi_phi,
    solve_ruin_at_death,
)
from .shortfall import PenaltyFunction, pi_V, value_f, value_shortfall
from .shortfall_at_death import ShootingSolution, U_strategy, U_value, pi_U, solve_U
from .strategy import Regime, Strategy, from_table, load_strategy_csv

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DerivedConstants",
    "DomainError",
    "DualCurve",
    "EXAMPLE_PARAMS",
    "EXAMPLE_SPEC",
    "MarketParams",
    "NegativeWealthMode",
    "NoBorrowCase",
    "NoBorrowSolution",
    "NumericalError",
    "ParameterError",
    "PenaltyFunction",
    "ProblemSpec",
    "Regime",
    "RuinAtDeathSolution",
    "RuinkitError",
    "ShootingSolution",
    "SolverError",
    "Strategy",
    "U_strategy",
    "U_value",
    "derive_constants",
    "from_table",
    "load_spec",
    "load_strategy_csv",
    "min_wealth_cdf",
    "nb_strategy",
    "parse_config",
    "phi",
    "phi_strategy",
    "pi_U",
    "pi_V",
    "pi_nb",
    "pi_phi",
    "pi_psi",
    "psi",
    "psi_nb",
    "psi_strategy",
    "solve_U",
    "solve_psi_nb",
    "solve_ruin_at_death",
    "value_f",
    "value_f_nb",
    "value_shortfall",
    "value_shortfall_nb",
]
