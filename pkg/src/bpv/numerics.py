"""Quadrature, the average potential present value, and stance thresholds.

The average PPV is the centroid of the membership curve. The curve jumps at
the market price whenever the price is off equilibrium and has kinks at the
mapped reference knots, so both integrals are always split there.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from itertools import pairwise

import numpy as np

from bpv._kernels import kernels as _k
from bpv.acceptance import knot_prices
from bpv.errors import (
    BPVNumericalError,
    BracketError,
    DegenerateMassError,
    DomainError,
    NoSignChangeError,
    QuadratureError,
)
from bpv.profile import InvestorProfile, MarketContext, regime_bounds, scope

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_depth: int = 50

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise DomainError("max_depth must be at least 1")


@dataclass(frozen=True)
class RootSpec:
    x_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.x_tol > 0:
            raise DomainError("x_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


# -- generic quadrature ----------------------------------------------------------------------


def _simpson_piece(f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec) -> float:
    fa = f(math.nextafter(a, b))
    fb = f(math.nextafter(b, a))
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    eps = max(spec.abs_tol, spec.rel_tol * abs(whole))
    stack = [(a, b, fa, fm, fb, whole, eps, 0)]
    total = 0.0
    while stack:
        x0, x1, f0, fmid, f1, s, e, depth = stack.pop()
        xm = 0.5 * (x0 + x1)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x1)
        fl = f(xl)
        fr = f(xr)
        left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + fmid)
        right = (x1 - xm) / 6.0 * (fmid + 4.0 * fr + f1)
        delta = left + right - s
        if abs(delta) <= 15.0 * e:
            total += left + right + delta / 15.0
            continue
        if depth >= spec.max_depth or xl <= x0 or xr >= x1:
            raise QuadratureError(x0, x1)
        stack.append((xm, x1, fmid, fr, f1, right, 0.5 * e, depth + 1))
        stack.append((x0, xm, f0, fl, fmid, left, 0.5 * e, depth + 1))
    return total


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Adaptive Simpson integral of ``f`` over ``[a, b]``.

    Each sub-interval between consecutive breakpoints is integrated on its
    own, with its end values sampled one ulp inside, so ``f`` may jump at a
    breakpoint.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if b < a:
        raise DomainError(f"need a <= b, got [{a!r}, {b!r}]")
    if a == b:
        return 0.0
    pts = sorted({a, b, *(float(x) for x in breakpoints if a < x < b)})
    return math.fsum(_simpson_piece(f, lo, hi, spec) for lo, hi in pairwise(pts))


# -- root finding ----------------------------------------------------------------------------


def bisect_bracket(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: RootSpec = RootSpec(),
    fa: float | None = None,
    fb: float | None = None,
) -> tuple[float, float, float, float]:
    """Shrink a sign-change bracket to width ``x_tol``.

    Returns ``(a, b, f(a), f(b))`` of the final bracket; the signs at the two
    ends still differ, unless ``f`` hit exactly zero, in which case
    ``a == b`` is that zero.
    """
    if a > b:
        a, b = b, a
        fa, fb = fb, fa
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a, a, fa, fa
    if fb == 0.0:
        return b, b, fb, fb
    if not (fa < 0.0) != (fb < 0.0) or math.isnan(fa) or math.isnan(fb):
        raise BracketError(f"no sign change on [{a!r}, {b!r}] (f = {fa!r}, {fb!r})")
    for _ in range(spec.max_iter):
        if b - a <= spec.x_tol:
            return a, b, fa, fb
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            return a, b, fa, fb
        fm = f(m)
        if fm == 0.0:
            return m, m, fm, fm
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    if b - a <= spec.x_tol:
        return a, b, fa, fb
    raise BPVNumericalError(f"bisection did not reach x_tol={spec.x_tol!r} in {spec.max_iter} steps")


def bisect(f: Callable[[float], float], a: float, b: float, spec: RootSpec = RootSpec()) -> float:
    lo, hi, _, _ = bisect_bracket(f, a, b, spec)
    return 0.5 * (lo + hi)


# -- average PPV -----------------------------------------------------------------------------


def membership_moments(
    profile: InvestorProfile, ctx: MarketContext, spec: QuadratureSpec = QuadratureSpec()
) -> tuple[float, float]:
    """Mass of the membership curve and its first moment about the market price."""
    dc = ctx.deviation
    sc = scope(profile, ctx.c0, dc)
    ref = profile.reference
    breaks = np.array(knot_prices(sc, ref), dtype=np.float64)
    m0, m1, bad_a, bad_b = _k.curve_moments(
        breaks, sc.anchor, sc.lo, sc.anchor, sc.hi, dc, ref.betas, ref.values,
        spec.rel_tol, spec.abs_tol, spec.max_depth,
    )
    if not math.isnan(bad_a):
        raise QuadratureError(float(bad_a), float(bad_b))
    return float(m0), float(m1)


def average_ppv(
    profile: InvestorProfile, ctx: MarketContext, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """Centroid of the membership curve (the investor's average present value)."""
    m0, m1 = membership_moments(profile, ctx, spec)
    if m0 < spec.abs_tol:
        raise DegenerateMassError(f"membership mass {m0!r} below {spec.abs_tol!r}")
    return ctx.market_price + m1 / m0


def average_ppv_riemann(profile: InvestorProfile, ctx: MarketContext, cells: int = 10_000) -> float:
    """Midpoint-rule centroid; a coarse cross-check for :func:`average_ppv`."""
    dc = ctx.deviation
    sc = scope(profile, ctx.c0, dc)
    ref = profile.reference
    m0, m1 = _k.riemann_moments(sc.lo, sc.anchor, sc.hi, int(cells), dc, ref.betas, ref.values)
    if m0 <= 0.0:
        raise DegenerateMassError(f"membership mass {m0!r} is not positive")
    return sc.anchor + m1 / m0


def stance_gap(
    profile: InvestorProfile, c0: float, dc: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """Average PPV minus market price: positive for a buyer, negative for a seller."""
    ctx = MarketContext.from_deviation(c0, dc)
    m0, m1 = membership_moments(profile, ctx, spec)
    if m0 < spec.abs_tol:
        raise DegenerateMassError(f"membership mass {m0!r} below {spec.abs_tol!r}")
    return m1 / m0


# -- stance thresholds -----------------------------------------------------------------------


@dataclass(frozen=True)
class Crossing:
    """One sign change of the stance gap.

    ``bracket`` has width at most ``x_tol`` (zero if the gap vanished exactly
    at a grid point); ``gaps`` are the gap values at its ends. ``direction``
    is -1 when the gap falls through zero (buyer to seller as the deviation
    grows) and +1 when it rises.
    """

    root: float
    bracket: tuple[float, float]
    gaps: tuple[float, float]
    direction: int


@dataclass(frozen=True)
class ThresholdResult:
    """All crossings found, in increasing deviation order; ``root`` is the first."""

    crossings: tuple[Crossing, ...]
    scan_range: tuple[float, float]
    gap_below: float
    gap_above: float

    @property
    def root(self) -> float:
        return self.crossings[0].root

    @property
    def bracket(self) -> tuple[float, float]:
        return self.crossings[0].bracket

    @property
    def roots(self) -> tuple[float, ...]:
        return tuple(c.root for c in self.crossings)


def relevance_range(profile: InvestorProfile, c0: float) -> tuple[float, float]:
    """Deviations over which the stance can change.

    The behavioural regime, cut to positive market prices. An unbounded
    regime (``alpha == 1``) is capped at doubling the equilibrium price.
    """
    lower, upper = regime_bounds(profile, c0)
    return max(lower, -c0), min(upper, c0)


def scan_gap(
    profile: InvestorProfile,
    c0: float,
    lo: float,
    hi: float,
    step: float = 0.05,
    spec: QuadratureSpec = QuadratureSpec(),
) -> tuple[np.ndarray, np.ndarray]:
    """Stance gap on an even grid from ``lo`` to ``hi`` with spacing at most ``step``.

    A left end at zero market price is nudged inward.
    """
    if not hi > lo:
        raise DomainError(f"empty scan range [{lo!r}, {hi!r}]")
    if not step > 0:
        raise DomainError("scan step must be positive")
    n = max(1, math.ceil((hi - lo) / step))
    grid = np.linspace(lo, hi, n + 1)
    if grid[0] <= -c0:
        grid[0] = -c0 + min(step, hi - lo) * 1e-6
    gaps = np.array([stance_gap(profile, c0, float(x), spec) for x in grid])
    return grid, gaps


def _refine(profile, c0, a, b, ga, gb, root_spec, quad_spec) -> Crossing:
    lo, hi, glo, ghi = bisect_bracket(
        lambda x: stance_gap(profile, c0, x, quad_spec), a, b, root_spec, ga, gb
    )
    direction = 1 if ga < 0.0 else -1
    return Crossing(0.5 * (lo + hi), (lo, hi), (glo, ghi), direction)


def solve_stance_threshold(
    profile: InvestorProfile,
    c0: float,
    bracket: tuple[float, float] | None = None,
    root_spec: RootSpec = RootSpec(),
    quad_spec: QuadratureSpec = QuadratureSpec(),
    scan_step: float = 0.05,
) -> ThresholdResult:
    """Deviation(s) at which the investor switches between buying and selling.

    With an explicit ``bracket`` the gap must change sign across it. Otherwise
    the behavioural regime is scanned at ``scan_step`` and every sign change
    is refined by bisection; several crossings are all reported.
    """
    profile.check_equilibrium(c0)
    if bracket is not None:
        a, b = sorted(float(x) for x in bracket)
        ga = stance_gap(profile, c0, a, quad_spec)
        gb = stance_gap(profile, c0, b, quad_spec)
        if ga != 0.0 and gb != 0.0 and (ga < 0.0) == (gb < 0.0):
            raise BracketError(f"stance gap keeps its sign on [{a!r}, {b!r}] ({ga!r}, {gb!r})")
        crossing = _refine(profile, c0, a, b, ga, gb, root_spec, quad_spec)
        return ThresholdResult((crossing,), (a, b), ga, gb)

    lo, hi = relevance_range(profile, c0)
    grid, gaps = scan_gap(profile, c0, lo, hi, scan_step, quad_spec)
    crossings: list[Crossing] = []
    last = None
    for i, g in enumerate(gaps):
        if g == 0.0:
            x = float(grid[i])
            before = gaps[last] if last is not None else 0.0
            crossings.append(Crossing(x, (x, x), (0.0, 0.0), 1 if before < 0.0 else -1))
            continue
        if last is not None and (gaps[last] < 0.0) != (g < 0.0):
            if last == i - 1:
                crossings.append(
                    _refine(profile, c0, float(grid[last]), float(grid[i]),
                            float(gaps[last]), float(g), root_spec, quad_spec)
                )
        last = i
    if not crossings:
        raise NoSignChangeError(
            f"stance gap keeps its sign over deviations [{lo!r}, {hi!r}]"
        )
    if len(crossings) > 1:
        log.info("stance gap changes sign %d times; first at %r", len(crossings), crossings[0].root)
    return ThresholdResult(tuple(crossings), (float(grid[0]), float(grid[-1])),
                           float(gaps[0]), float(gaps[-1]))
