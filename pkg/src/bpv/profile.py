"""Investor and market types, regime geometry and the standardization map.

An investor's admissible present values at equilibrium form ``[c_min, c_max]``
around the equilibrium price ``c0``. When the market price moves by
``dc = market_price - c0`` both bounds track the move with weight ``alpha``
and are clamped so that the market price itself stays admissible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import TYPE_CHECKING

from bpv.errors import DomainError, RangeError

if TYPE_CHECKING:
    from bpv.acceptance import ReferenceDistribution


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def _dec(x: float) -> Decimal:
    return Decimal(repr(float(x)))


@dataclass(frozen=True)
class MarketContext:
    """Equilibrium price ``c0`` and observed ``market_price``."""

    c0: float
    market_price: float
    deviation: float = field(init=False)

    def __post_init__(self) -> None:
        c0 = _finite("c0", self.c0)
        price = _finite("market_price", self.market_price)
        if c0 <= 0 or price <= 0:
            raise DomainError(f"prices must be positive (c0={c0!r}, market_price={price!r})")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "market_price", price)
        object.__setattr__(self, "deviation", price - c0)

    @classmethod
    def from_deviation(cls, c0: float, dc: float) -> MarketContext:
        return cls(c0, c0 + dc)


def deviation(ctx: MarketContext) -> float:
    return ctx.deviation


@dataclass(frozen=True)
class InvestorProfile:
    """Behavioural characteristics of one investor.

    Attributes:
        c_min: lower bound of admissible present values at equilibrium.
        c_max: upper bound of admissible present values at equilibrium.
        alpha: susceptibility to price moves, in ``[0, 1]``; ``1 - alpha`` is
            the weight of cognitive conservatism.
        reference: acceptance distribution at equilibrium.
    """

    c_min: float
    c_max: float
    alpha: float
    reference: ReferenceDistribution

    def __post_init__(self) -> None:
        c_min = _finite("c_min", self.c_min)
        c_max = _finite("c_max", self.c_max)
        alpha = _finite("alpha", self.alpha)
        if not c_min < c_max:
            raise DomainError(f"c_min must be below c_max (got {c_min!r} >= {c_max!r})")
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
        object.__setattr__(self, "c_min", c_min)
        object.__setattr__(self, "c_max", c_max)
        object.__setattr__(self, "alpha", alpha)

    def check_equilibrium(self, c0: float) -> None:
        """Raise unless ``c_min < c0 < c_max``."""
        if not self.c_min < c0 < self.c_max:
            raise DomainError(
                f"equilibrium price {c0!r} must lie strictly inside ({self.c_min!r}, {self.c_max!r})"
            )

    def shifted(self, offset: float) -> InvestorProfile:
        return InvestorProfile(self.c_min + offset, self.c_max + offset, self.alpha, self.reference)


class Regime(enum.Enum):
    BELOW_RANGE = "below_range"
    BEHAVIOURAL = "behavioural"
    ABOVE_RANGE = "above_range"


@dataclass(frozen=True)
class ScopeInterval:
    """Admissible present values ``[lo, hi]`` with the market price as ``anchor``.

    A single point (``lo == anchor == hi``) is allowed and represents a crisp
    value; otherwise ``lo < hi``.
    """

    lo: float
    hi: float
    anchor: float

    def __post_init__(self) -> None:
        if not self.lo <= self.anchor <= self.hi:
            raise RangeError(f"scope requires lo <= anchor <= hi, got {self}")

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def left_width(self) -> float:
        return self.anchor - self.lo

    @property
    def right_width(self) -> float:
        return self.hi - self.anchor

    def __contains__(self, p: float) -> bool:
        return self.lo <= p <= self.hi


def regime_bounds(profile: InvestorProfile, c0: float) -> tuple[float, float]:
    """Deviations at which the scope stops tracking on one side.

    Below the first value the scope collapses onto the market price from the
    left, above the second from the right. ``alpha == 1`` never collapses.
    """
    profile.check_equilibrium(c0)
    if profile.alpha == 1.0:
        return -math.inf, math.inf
    # decimal arithmetic on the shortest repr keeps inputs such as alpha=0.8
    # from landing the bound an ulp off its decimal value (1 - 0.8 != 0.2)
    k = 1 - _dec(profile.alpha)
    c0d = _dec(c0)
    return float((_dec(profile.c_min) - c0d) / k), float((_dec(profile.c_max) - c0d) / k)


def classify_regime(profile: InvestorProfile, c0: float, dc: float) -> Regime:
    lower, upper = regime_bounds(profile, c0)
    if dc <= lower:
        return Regime.BELOW_RANGE
    if dc >= upper:
        return Regime.ABOVE_RANGE
    return Regime.BEHAVIOURAL


def scope(profile: InvestorProfile, c0: float, dc: float) -> ScopeInterval:
    lower, upper = regime_bounds(profile, c0)
    anchor = c0 + dc
    lo = anchor if dc <= lower else profile.c_min + profile.alpha * dc
    hi = anchor if dc >= upper else profile.c_max + profile.alpha * dc
    # rounding near a regime boundary may put the tracked bound an ulp past
    # the market price; the clamp is part of the model anyway
    return ScopeInterval(min(lo, anchor), max(hi, anchor), anchor)


def scope_minmax(profile: InvestorProfile, c0: float, dc: float) -> ScopeInterval:
    """Clamped weighted-average form of :func:`scope` (same values)."""
    profile.check_equilibrium(c0)
    anchor = c0 + dc
    tracked_lo = profile.alpha * (profile.c_min + dc) + (1.0 - profile.alpha) * profile.c_min
    tracked_hi = profile.alpha * (profile.c_max + dc) + (1.0 - profile.alpha) * profile.c_max
    return ScopeInterval(min(tracked_lo, anchor), max(tracked_hi, anchor), anchor)


def standardize(sc: ScopeInterval, p: float) -> float:
    """Map a price in the scope to ``[-1, 1]`` with the anchor at 0."""
    if not sc.lo <= p <= sc.hi:
        raise RangeError(f"price {p!r} outside scope [{sc.lo!r}, {sc.hi!r}]")
    if p == sc.anchor:
        return 0.0
    if p == sc.lo:
        return -1.0
    if p == sc.hi:
        return 1.0
    if p < sc.anchor:
        return max(-1.0, (p - sc.anchor) / sc.left_width)
    return min(1.0, (p - sc.anchor) / sc.right_width)


def destandardize(sc: ScopeInterval, beta: float) -> float:
    if not -1.0 <= beta <= 1.0:
        raise RangeError(f"standardized value {beta!r} outside [-1, 1]")
    if beta == -1.0:
        return sc.lo
    if beta == 1.0:
        return sc.hi
    if beta < 0.0:
        return sc.anchor + beta * sc.left_width
    return sc.anchor + beta * sc.right_width
