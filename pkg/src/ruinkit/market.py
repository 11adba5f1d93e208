"""Market and mortality parameters, derived constants and problem specifications."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ParameterError, RuinkitError


class NegativeWealthMode(enum.Enum):
    """Treatment of negative wealth in the borrowing-constrained problems."""

    WELFARE = "welfare"  # zero wealth is absorbing, consumption paid externally
    BORROW = "borrow"  # borrowing allowed to fund consumption only

    @classmethod
    def parse(cls, value: str) -> "NegativeWealthMode":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ParameterError(f"mode must be 'welfare' or 'borrow', got {value!r}") from None


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market with constant consumption and exponential lifetime.

    Rates are per year, ``sigma`` per square-root year and ``c`` in wealth units
    per year. The caller is responsible for consistent units.
    """

    mu: float
    r: float
    sigma: float
    lam: float
    c: float

    def __post_init__(self):
        checks = [
            (self.r > 0, "r > 0"),
            (self.mu > self.r, "mu > r"),
            (self.sigma > 0, "sigma > 0"),
            (self.lam > 0, "lambda > 0"),
            (self.c > 0, "c > 0"),
        ]
        for name in ("mu", "r", "sigma", "lam", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"parameter {name} must be finite")
        for ok, text in checks:
            if not ok:
                raise ParameterError(f"parameter inequality violated: {text}")

    @property
    def safe(self) -> float:
        return self.c / self.r


@dataclass(frozen=True)
class DerivedConstants:
    delta: float
    p: float
    B1: float
    B2: float
    xi: float
    w_l: float
    safe: float

    @property
    def unconstrained_slope(self) -> float:
        """Risky dollars per unit of distance to the safe level, (mu-r)/(sigma^2 (p-1))."""
        return self.xi


@functools.lru_cache(maxsize=256)
def derive_constants(params: MarketParams) -> DerivedConstants:
    """Compute p, the dual exponents B1/B2 and the lending level for ``params``."""
    mu, r, sigma, lam, c = params.mu, params.r, params.sigma, params.lam, params.c
    delta = 0.5 * ((mu - r) / sigma) ** 2

    a = r + lam + delta
    disc_p = a * a - 4.0 * r * lam
    b = r - lam + delta
    disc_b = b * b + 4.0 * lam * delta
    if disc_p < 0 or disc_b < 0:
        # impossible for validated parameters
        raise RuinkitError(f"negative discriminant ({disc_p}, {disc_b}) for {params}")

    p = (a + math.sqrt(disc_p)) / (2.0 * r)
    sq = math.sqrt(disc_b)
    B1 = (b + sq) / (2.0 * delta)
    B2 = (b - sq) / (2.0 * delta)
    xi = (mu - r) / sigma**2 / (p - 1.0)
    safe = c / r
    w_l = xi / (1.0 + xi) * safe
    return DerivedConstants(delta=delta, p=p, B1=B1, B2=B2, xi=xi, w_l=w_l, safe=safe)


@dataclass(frozen=True)
class ProblemSpec:
    """A market plus the reference levels of a particular objective.

    ``x`` is the ruin or shortfall reference level, ``M`` the lower absorbing
    level of the at-death problems and ``mode`` the negative-wealth convention of
    the no-borrowing problems.
    """

    params: MarketParams
    x: float = 0.0
    M: float | None = None
    mode: NegativeWealthMode | None = None

    def __post_init__(self):
        safe = self.params.safe
        if not self.x < safe:
            raise ParameterError(f"reference level violated: x < c/r ({self.x} >= {safe})")
        if self.M is not None and not self.M < self.x:
            raise ParameterError(f"levels violated: M < x ({self.M} >= {self.x})")

    @property
    def consts(self) -> DerivedConstants:
        return derive_constants(self.params)

    def with_levels(self, x: float | None = None, M: float | None = None) -> "ProblemSpec":
        return ProblemSpec(
            self.params,
            self.x if x is None else x,
            self.M if M is None else M,
            self.mode,
        )

    def require_M(self) -> float:
        if self.M is None:
            raise ParameterError("this problem needs the lower ruin level M")
        return self.M


EXAMPLE_PARAMS = MarketParams(mu=0.06, r=0.02, sigma=0.20, lam=0.04, c=1.0)
EXAMPLE_SPEC = ProblemSpec(EXAMPLE_PARAMS, x=0.0, M=-200.0)

_FLOAT_KEYS = ("mu", "r", "sigma", "lambda", "c", "x", "M")


def parse_config(text: str) -> dict:
    """Parse a flat ``key = value`` (or ``key: value``) file.

    Blank lines and ``#`` comments are ignored. Keys are mu, r, sigma, lambda,
    c, x, M and mode; errors name the offending key.
    """
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = (part.strip() for part in line.split(sep, 1))
                break
        else:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key in _FLOAT_KEYS:
            try:
                out[key] = float(value)
            except ValueError:
                raise ParameterError(f"key {key!r}: not a number: {value!r}") from None
        elif key == "mode":
            out[key] = NegativeWealthMode.parse(value)
        else:
            raise ParameterError(f"key {key!r}: unknown configuration key")
    return out


def spec_from_mapping(values: Mapping) -> ProblemSpec:
    missing = [k for k in ("mu", "r", "sigma", "lambda", "c") if k not in values]
    if missing:
        raise ParameterError(f"key {missing[0]!r}: missing required parameter")
    params = MarketParams(
        mu=values["mu"], r=values["r"], sigma=values["sigma"], lam=values["lambda"], c=values["c"]
    )
    return ProblemSpec(params, x=values.get("x", 0.0), M=values.get("M"), mode=values.get("mode"))


def load_spec(path: str | Path) -> ProblemSpec:
    return spec_from_mapping(parse_config(Path(path).read_text()))
