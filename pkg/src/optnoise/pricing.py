"""European (Black-Scholes) and American (Barone-Adesi-Whaley) option pricing.

All functions are pure and thread-safe.  Heavy lifting happens in the kernel
backend selected by :mod:`optnoise._backend`.

Notation
--------
The BAW literature uses ``X`` for two different things: the strike, and the
time-scaling function ``X(T) = 1 - exp(-r T)``.  Here the strike is always
``strike`` and the scaling function is ``big_x``.  The ``8r / (X sigma^2)``
term inside ``q1``/``q2`` uses the scaling function, not the strike.

The early-exercise coefficients are::

    A2 =  (S* / q2)  * (1 - exp((b - r) T) * N( d1(S*)))
    A1 = -(S** / q1) * (1 - exp((b - r) T) * N(-d1(S**)))

with the carry discount applied to ``N(.)`` inside the bracket, consistent
with the value-matching condition that defines ``S*`` and ``S**``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from ._backend import kernels
from .exceptions import CriticalPriceError, DegenerateInputError, DomainError

RATE_EPS = 1e-12
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100


class OptionType(str, enum.Enum):
    CALL = "call"
    PUT = "put"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("c", "call"):
            return cls.CALL
        if v in ("p", "put"):
            return cls.PUT
        raise DomainError(f"unknown option type {value!r}")


class ExerciseStyle(str, enum.Enum):
    EUROPEAN = "european"
    AMERICAN = "american"


@dataclass(frozen=True)
class OptionContractSpec:
    option_type: OptionType
    exercise_style: ExerciseStyle
    strike: float
    time_to_expiry: float

    def __post_init__(self):
        object.__setattr__(self, "option_type", OptionType.parse(self.option_type))
        object.__setattr__(self, "exercise_style", ExerciseStyle(self.exercise_style))
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be > 0, got {self.strike}")
        if not (math.isfinite(self.time_to_expiry) and self.time_to_expiry >= 0):
            raise DomainError(f"time_to_expiry must be >= 0, got {self.time_to_expiry}")

    @property
    def is_call(self):
        return self.option_type is OptionType.CALL

    def european_twin(self):
        return OptionContractSpec(self.option_type, ExerciseStyle.EUROPEAN,
                                  self.strike, self.time_to_expiry)

    def american_twin(self):
        return OptionContractSpec(self.option_type, ExerciseStyle.AMERICAN,
                                  self.strike, self.time_to_expiry)


@dataclass(frozen=True)
class MarketParams:
    """Pricing inputs at one moment.

    ``volatility == 0`` is accepted here so that pricers can report it as a
    degenerate input rather than a construction failure.
    """

    spot: float
    rate: float
    volatility: float
    dividend_yield: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.spot) and self.spot > 0):
            raise DomainError(f"spot must be > 0, got {self.spot}")
        if not math.isfinite(self.rate):
            raise DomainError(f"rate must be finite, got {self.rate}")
        if not (math.isfinite(self.dividend_yield) and self.dividend_yield >= 0):
            raise DomainError(f"dividend_yield must be >= 0, got {self.dividend_yield}")
        if not (math.isfinite(self.volatility) and self.volatility >= 0):
            raise DomainError(f"volatility must be >= 0, got {self.volatility}")

    @property
    def cost_of_carry(self):
        return self.rate - self.dividend_yield


@dataclass(frozen=True)
class BawIntermediates:
    q1: float
    q2: float
    big_x: float
    a1: Optional[float]
    a2: Optional[float]
    critical_price: float
    iterations_used: int


class CriticalPrice(NamedTuple):
    critical_price: float
    iterations: int
    residual: float


def std_normal_cdf(x):
    """Standard normal CDF, accurate to ~1e-16 absolute."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf needs a finite argument, got {x}")
    return kernels.norm_cdf(x)


def intrinsic_value(spec, spot):
    if spec.is_call:
        return max(spot - spec.strike, 0.0)
    return max(spec.strike - spot, 0.0)


def _require_nondegenerate(spec, params):
    if spec.time_to_expiry == 0:
        raise DegenerateInputError("time_to_expiry is zero; use the intrinsic value")
    if params.volatility == 0:
        raise DegenerateInputError("volatility is zero")


def bs_d_values(spec, params):
    """Return ``(d1, d2)`` with ``d2 = d1 - sigma * sqrt(T)``."""
    _require_nondegenerate(spec, params)
    T, sigma = spec.time_to_expiry, params.volatility
    sd = sigma * math.sqrt(T)
    d1 = (math.log(params.spot / spec.strike)
          + (params.cost_of_carry + 0.5 * sigma * sigma) * T) / sd
    return d1, d1 - sd


def bs_price(spec, params):
    """Black-Scholes price of a European option with continuous dividend yield.

    At expiry the intrinsic value is returned.  With zero volatility the
    deterministic-forward limit is returned.
    """
    if spec.exercise_style is not ExerciseStyle.EUROPEAN:
        raise DomainError("bs_price prices European contracts; pass spec.european_twin()")
    S, K, T = params.spot, spec.strike, spec.time_to_expiry
    if T == 0:
        return intrinsic_value(spec, S)
    r, b = params.rate, params.cost_of_carry
    if params.volatility == 0:
        fwd = S * math.exp((b - r) * T) - K * math.exp(-r * T)
        return max(fwd, 0.0) if spec.is_call else max(-fwd, 0.0)
    return max(kernels.bs_price(spec.is_call, S, K, T, r, b, params.volatility), 0.0)


def baw_q_values(params, spec):
    """Return ``(q1, q2, big_x)``.

    ``q1`` and ``q2`` are the negative and positive roots of
    ``q^2 + q (2b/sigma^2 - 1) - 2r / (sigma^2 big_x) = 0``.  When
    ``|r| < 1e-12`` the ratio ``2r / big_x`` is replaced by its limit
    ``2 / T`` and ``big_x`` is reported as 0.
    """
    _require_nondegenerate(spec, params)
    return kernels.baw_q(spec.time_to_expiry, params.rate,
                         params.cost_of_carry, params.volatility)


def _check_american(spec):
    if spec.exercise_style is not ExerciseStyle.AMERICAN:
        raise DomainError("BAW applies to American contracts")


def baw_critical_price(spec, params, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Solve for the critical stock price (S* for calls, S** for puts).

    Newton-Raphson on the value-matching residual, seeded at the strike and
    stopped once ``|residual| < tol * strike``; steps leaving the current
    bracket fall back to bisection.  Calls whose cost of carry is at least
    the rate, and any contract with ``|r| < 1e-12``, have no finite
    boundary: ``inf`` is returned for calls and ``0.0`` for puts.

    Raises
    ------
    CriticalPriceError
        If ``max_iter`` iterations do not reach the tolerance.
    """
    _check_american(spec)
    _require_nondegenerate(spec, params)
    s, it, resid, status = kernels.baw_critical_price(
        spec.is_call, spec.strike, spec.time_to_expiry, params.rate,
        params.cost_of_carry, params.volatility, tol, max_iter)
    if status != 0:
        raise CriticalPriceError(
            f"critical price did not converge in {max_iter} iterations "
            f"(last {s:.10g}, residual {resid:.3g})", s, resid, it)
    return CriticalPrice(s, it, resid)


def value_matching_residual(spec, params, s_crit):
    """Value-matching residual at a candidate critical price."""
    q1, q2, _ = kernels.baw_q(spec.time_to_expiry, params.rate,
                              params.cost_of_carry, params.volatility)
    g, _ = kernels.value_matching(spec.is_call, s_crit, spec.strike,
                                  spec.time_to_expiry, params.rate,
                                  params.cost_of_carry, params.volatility,
                                  q2 if spec.is_call else q1)
    return g


def baw_price(spec, params, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Barone-Adesi-Whaley approximation for an American option."""
    _check_american(spec)
    S = params.spot
    if spec.time_to_expiry == 0:
        return intrinsic_value(spec, S)
    _require_nondegenerate(spec, params)
    price, s, it, resid, status = kernels.baw_price(
        spec.is_call, S, spec.strike, spec.time_to_expiry, params.rate,
        params.cost_of_carry, params.volatility, tol, max_iter)
    if status != 0:
        raise CriticalPriceError(
            f"critical price did not converge in {max_iter} iterations "
            f"(last {s:.10g}, residual {resid:.3g})", s, resid, it)
    return max(price, 0.0)


def baw_intermediates(spec, params, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Expose q1, q2, X(T), the relevant A coefficient and the boundary."""
    _check_american(spec)
    q1, q2, big_x = baw_q_values(params, spec)
    crit = baw_critical_price(spec, params, tol, max_iter)
    s = crit.critical_price
    a1 = a2 = None
    carry = math.exp((params.cost_of_carry - params.rate) * spec.time_to_expiry)
    if spec.is_call:
        if math.isinf(s):
            a2 = 0.0
        else:
            d1, _ = bs_d_values(spec, MarketParams(s, params.rate, params.volatility,
                                                   params.dividend_yield))
            a2 = s / q2 * (1.0 - carry * kernels.norm_cdf(d1))
    else:
        if s == 0.0:
            a1 = 0.0
        else:
            d1, _ = bs_d_values(spec, MarketParams(s, params.rate, params.volatility,
                                                   params.dividend_yield))
            a1 = -s / q1 * (1.0 - carry * kernels.norm_cdf(-d1))
    return BawIntermediates(q1, q2, big_x, a1, a2, s, crit.iterations)


def crr_binomial_price(spec, params, steps):
    """Cox-Ross-Rubinstein binomial lattice price (either exercise style)."""
    steps = int(steps)
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    if spec.time_to_expiry == 0:
        return intrinsic_value(spec, params.spot)
    if params.volatility == 0:
        raise DegenerateInputError("lattice needs volatility > 0")
    try:
        return kernels.crr_price(
            spec.is_call, spec.exercise_style is ExerciseStyle.AMERICAN,
            params.spot, spec.strike, spec.time_to_expiry, params.rate,
            params.cost_of_carry, params.volatility, steps)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
