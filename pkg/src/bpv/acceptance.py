"""Acceptance distributions and the membership function of the present value.

The model is defined in standardized coordinates: an acceptance degree
``nu(beta | dc)`` blends the investor's reference distribution with the
direction a rational forecast points to, the forecast's weight growing with
both the size of the price deviation and the closeness of ``beta`` to the
market price. :func:`membership` pulls this back to price space.

:func:`membership_printed` is a separate route through the explicit
price-space formulas (kappa / phi / psi / lambda), kept only as a cross-check.
Those formulas carry the signed deviation where the weight needs its absolute
value, so they agree with :func:`membership` only for ``dc >= 0``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from bpv._kernels import kernels as _k
from bpv.errors import DomainError, RangeError, ReferenceValidationError
from bpv.profile import (
    InvestorProfile,
    MarketContext,
    ScopeInterval,
    destandardize,
    scope,
    standardize,
)

Knot = tuple[float, float]


def validate_reference(knots: ReferenceDistribution | Iterable[Knot]) -> None:
    """Raise :class:`ReferenceValidationError` on the first violated condition.

    Conditions, checked in order: well-formed knots spanning ``[-1, 1]`` with
    a knot at 0; zero at both ends; one at the apex; nondecreasing on
    ``[-1, 0]`` and nonincreasing on ``[0, 1]``.
    """
    if isinstance(knots, ReferenceDistribution):
        knots = knots.knots
    pts = [(float(b), float(v)) for b, v in knots]
    if len(pts) < 3:
        raise ReferenceValidationError("knots", "need at least the knots -1, 0 and 1")
    betas = [b for b, _ in pts]
    values = [v for _, v in pts]
    if not all(math.isfinite(x) for x in betas + values):
        raise ReferenceValidationError("knots", "knots must be finite")
    if any(b1 <= b0 for b0, b1 in zip(betas, betas[1:])):
        raise ReferenceValidationError("knots", "knot positions must be strictly increasing")
    if betas[0] != -1.0 or betas[-1] != 1.0 or 0.0 not in betas:
        raise ReferenceValidationError("knots", "knots must start at -1, end at 1 and include 0")
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ReferenceValidationError("knots", "values must lie in [0, 1]")
    if values[0] != 0.0 or values[-1] != 0.0:
        raise ReferenceValidationError("endpoint", "value must be 0 at -1 and at 1")
    apex = betas.index(0.0)
    if values[apex] != 1.0:
        raise ReferenceValidationError("apex", f"value at 0 must be 1, got {values[apex]!r}")
    for i in range(apex):
        if values[i + 1] < values[i]:
            raise ReferenceValidationError(
                "monotonicity", f"decreases on [-1, 0] between {betas[i]!r} and {betas[i + 1]!r}"
            )
    for i in range(apex, len(pts) - 1):
        if values[i + 1] > values[i]:
            raise ReferenceValidationError(
                "monotonicity", f"increases on [0, 1] between {betas[i]!r} and {betas[i + 1]!r}"
            )


@dataclass(frozen=True)
class ReferenceDistribution:
    """Piecewise-linear acceptance at equilibrium, given by ``(beta, value)`` knots."""

    knots: tuple[Knot, ...]
    betas: np.ndarray = field(init=False, repr=False, compare=False)
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        knots = tuple((float(b), float(v)) for b, v in self.knots)
        validate_reference(knots)
        object.__setattr__(self, "knots", knots)
        betas = np.array([b for b, _ in knots], dtype=np.float64)
        values = np.array([v for _, v in knots], dtype=np.float64)
        betas.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "values", values)

    def __call__(self, beta: float) -> float:
        if not -1.0 <= beta <= 1.0:
            raise RangeError(f"standardized value {beta!r} outside [-1, 1]")
        return float(_k.reference_value(float(beta), self.betas, self.values))

    @property
    def is_triangular(self) -> bool:
        return self.knots == ((-1.0, 0.0), (0.0, 1.0), (1.0, 0.0))


def triangular_reference() -> ReferenceDistribution:
    """``v(beta) = 1 - |beta|``."""
    return ReferenceDistribution(((-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)))


def trapezoidal_reference(plateau: float) -> ReferenceDistribution:
    """Full acceptance on ``[-plateau, plateau]``, linear to 0 at the ends."""
    if not 0.0 < plateau < 1.0:
        raise DomainError(f"plateau must lie in (0, 1), got {plateau!r}")
    return ReferenceDistribution(
        ((-1.0, 0.0), (-plateau, 1.0), (0.0, 1.0), (plateau, 1.0), (1.0, 0.0))
    )


def rational_forecast(dc: float, beta: float) -> int:
    """1 where rational rules expect the price to head, else 0."""
    if not -1.0 <= beta <= 1.0:
        raise RangeError(f"standardized value {beta!r} outside [-1, 1]")
    return int(_k.forecast(float(dc), float(beta)))


def acceptance(dist: ReferenceDistribution, dc: float, beta: float) -> float:
    """Acceptance degree of the standardized present value ``beta`` at deviation ``dc``."""
    if not -1.0 <= beta <= 1.0:
        raise RangeError(f"standardized value {beta!r} outside [-1, 1]")
    return float(_k.acceptance(float(beta), float(dc), dist.betas, dist.values))


def membership(profile: InvestorProfile, ctx: MarketContext, p: float) -> float:
    """Membership degree of price ``p``; 0 outside the scope."""
    sc = scope(profile, ctx.c0, ctx.deviation)
    ref = profile.reference
    return float(
        _k.membership(float(p), sc.lo, sc.anchor, sc.hi, ctx.deviation, ref.betas, ref.values)
    )


def membership_many(profile: InvestorProfile, ctx: MarketContext, ps) -> np.ndarray:
    sc = scope(profile, ctx.c0, ctx.deviation)
    ref = profile.reference
    ps = np.ascontiguousarray(ps, dtype=np.float64)
    return _k.membership_many(ps, sc.lo, sc.anchor, sc.hi, ctx.deviation, ref.betas, ref.values)


# -- explicit price-space formulas ---------------------------------------------------------
#
# Written in the raw parameters (c0, c_min, c_max, alpha, dc) rather than via
# ``scope`` so they stay an independent route. The weight factors use the
# signed deviation. phi and lambda are stored multiplied out, which avoids
# dividing by the reference value where it vanishes.


def _ref(profile: InvestorProfile, beta: float) -> float:
    # rounding can push the standardized coordinate an ulp past +-1
    return profile.reference(min(1.0, max(-1.0, beta)))


def _left_width(profile: InvestorProfile, c0: float, dc: float) -> float:
    return c0 - profile.c_min + (1.0 - profile.alpha) * dc


def _right_width(profile: InvestorProfile, c0: float, dc: float) -> float:
    return profile.c_max - c0 + (profile.alpha - 1.0) * dc


def printed_kappa(profile: InvestorProfile, c0: float, dc: float, p: float) -> float:
    w = _left_width(profile, c0, dc)
    dist_lo = p - profile.c_min - profile.alpha * dc
    v = _ref(profile, (p - (c0 + dc)) / w)
    return w / (w + dist_lo * dc) * v


def printed_phi(profile: InvestorProfile, c0: float, dc: float, p: float) -> float:
    w = _left_width(profile, c0, dc)
    dist_lo = p - profile.c_min - profile.alpha * dc
    v = _ref(profile, (p - (c0 + dc)) / w)
    pre = w / (w + dist_lo * dc)
    return pre * v + pre * (dist_lo / w) * dc


def printed_psi(profile: InvestorProfile, c0: float, dc: float, p: float) -> float:
    w = _right_width(profile, c0, dc)
    dist_hi = profile.c_max + profile.alpha * dc - p
    v = _ref(profile, (p - (c0 + dc)) / w)
    return w / (w + dist_hi * dc) * v


def printed_lambda(profile: InvestorProfile, c0: float, dc: float, p: float) -> float:
    w = _right_width(profile, c0, dc)
    dist_hi = profile.c_max + profile.alpha * dc - p
    v = _ref(profile, (p - (c0 + dc)) / w)
    pre = w / (w + dist_hi * dc)
    return pre * v + pre * (-dist_hi / w) * dc


def membership_printed(profile: InvestorProfile, ctx: MarketContext, p: float) -> float:
    """Closed-form membership for ``dc >= 0``: phi up to the market price, psi above."""
    c0, dc = ctx.c0, ctx.deviation
    if dc < 0:
        raise DomainError("explicit price-space formulas are only valid for a non-negative deviation")
    sc = scope(profile, c0, dc)
    if not sc.lo <= p <= sc.hi:
        return 0.0
    if p <= sc.anchor:
        return printed_phi(profile, c0, dc, p)
    return printed_psi(profile, c0, dc, p)


# -- curves -----------------------------------------------------------------------------------


def knot_prices(sc: ScopeInterval, reference: ReferenceDistribution) -> list[float]:
    """Reference knots mapped into price space, plus the scope ends and anchor."""
    pts = {sc.lo, sc.anchor, sc.hi}
    pts.update(destandardize(sc, float(b)) for b in reference.betas)
    return sorted(pts)


@dataclass(frozen=True)
class MembershipCurve:
    """An evaluable membership function over ``scope`` with its kinks and jumps.

    ``evaluate_many`` must agree with ``evaluator`` pointwise; it exists so
    that return-grid evaluation stays vectorised.
    """

    scope: ScopeInterval
    evaluator: Callable[[float], float]
    evaluate_many: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...]
    sample_p: np.ndarray
    sample_mu: np.ndarray

    def __call__(self, p: float) -> float:
        return self.evaluator(p)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.sample_p.tolist(), self.sample_mu.tolist()))

    @classmethod
    def crisp(cls, value: float) -> MembershipCurve:
        """Indicator of a single present value (matched up to rounding)."""
        value = float(value)
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"crisp value must be positive, got {value!r}")

        def indicator(p: float) -> float:
            return 1.0 if math.isclose(p, value, rel_tol=1e-12, abs_tol=0.0) else 0.0

        def indicator_many(ps: np.ndarray) -> np.ndarray:
            ps = np.asarray(ps, dtype=np.float64)
            return np.isclose(ps, value, rtol=1e-12, atol=0.0).astype(np.float64)

        return cls(
            ScopeInterval(value, value, value),
            indicator,
            indicator_many,
            (value,),
            np.array([value]),
            np.array([1.0]),
        )


def membership_curve(profile: InvestorProfile, ctx: MarketContext, n: int = 101) -> MembershipCurve:
    """Membership curve with ``n`` grid samples plus every breakpoint."""
    if n < 2:
        raise DomainError(f"need at least 2 sample points, got {n!r}")
    sc = scope(profile, ctx.c0, ctx.deviation)
    ref = profile.reference
    dc = ctx.deviation
    breaks = knot_prices(sc, ref)
    grid = np.unique(np.concatenate([np.linspace(sc.lo, sc.hi, n), breaks]))
    grid = grid[(grid >= sc.lo) & (grid <= sc.hi)]

    def evaluator(p: float) -> float:
        return float(_k.membership(float(p), sc.lo, sc.anchor, sc.hi, dc, ref.betas, ref.values))

    def evaluate_many(ps: np.ndarray) -> np.ndarray:
        ps = np.ascontiguousarray(ps, dtype=np.float64)
        return _k.membership_many(ps, sc.lo, sc.anchor, sc.hi, dc, ref.betas, ref.values)

    return MembershipCurve(sc, evaluator, evaluate_many, tuple(breaks), grid, evaluate_many(grid))


def alpha_cut(curve: MembershipCurve, level: float, tol: float = 1e-13) -> tuple[float, float]:
    """Closed interval where the curve is at least ``level``.

    Assumes the curve is nondecreasing up to its anchor and nonincreasing
    after it (true for the triangular reference); each end is located by
    bisection to ``tol`` relative to the scope width.
    """
    if not 0.0 < level <= 1.0:
        raise DomainError(f"alpha-cut level must lie in (0, 1], got {level!r}")
    sc = curve.scope
    if sc.is_point:
        return sc.anchor, sc.anchor
    xtol = tol * max(sc.hi - sc.lo, abs(sc.anchor))

    def boundary(inside: float, outside: float) -> float:
        if curve(outside) >= level:
            return outside
        while abs(outside - inside) > xtol:
            mid = 0.5 * (inside + outside)
            if mid == inside or mid == outside:
                break
            if curve(mid) >= level:
                inside = mid
            else:
                outside = mid
        return inside

    return boundary(sc.anchor, sc.lo), boundary(sc.anchor, sc.hi)


def standardized_membership(profile: InvestorProfile, ctx: MarketContext, p: float) -> float:
    """Same value as :func:`membership` computed through the public scalar helpers.

    Raises :class:`RangeError` outside the scope instead of returning 0.
    """
    sc = scope(profile, ctx.c0, ctx.deviation)
    return acceptance(profile.reference, ctx.deviation, standardize(sc, p))

