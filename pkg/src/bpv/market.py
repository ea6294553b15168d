"""Buyer / seller stances and where opposite stances coexist.

An investor whose average present value exceeds the market price expects the
price to rise and bids; one whose average sits below it offers. Because each
investor's average depends on personal behavioural parameters, a buyer and a
seller can meet at the same market price even when the market is efficient.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from bpv.errors import BPVError, DomainError, NoSignChangeError
from bpv.numerics import (
    QuadratureSpec,
    RootSpec,
    ThresholdResult,
    average_ppv,
    relevance_range,
    solve_stance_threshold,
    stance_gap,
)
from bpv.profile import InvestorProfile, MarketContext

DEFAULT_NEUTRAL_EPS = 1e-9

Interval = tuple[float, float]


class Stance(enum.Enum):
    BUYER = "buyer"
    SELLER = "seller"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class StanceResult:
    stance: Stance
    gap: float
    average_ppv: float


def stance(
    profile: InvestorProfile,
    ctx: MarketContext,
    eps: float = DEFAULT_NEUTRAL_EPS,
    spec: QuadratureSpec = QuadratureSpec(),
) -> StanceResult:
    """Classify the investor at the given market; ``|gap| <= eps`` is neutral."""
    if not eps >= 0:
        raise DomainError(f"neutral band must be non-negative, got {eps!r}")
    xi = average_ppv(profile, ctx, spec)
    gap = xi - ctx.market_price
    if gap > eps:
        kind = Stance.BUYER
    elif gap < -eps:
        kind = Stance.SELLER
    else:
        kind = Stance.NEUTRAL
    return StanceResult(kind, gap, xi)


def _signed_segments(res: ThresholdResult, c0: float) -> list[tuple[float, float, int]]:
    """Market-price segments with the sign of the stance gap on each."""
    cuts = [c0 + c.root for c in res.crossings]
    signs = [1 if res.gap_below > 0 else -1]
    signs += [c.direction for c in res.crossings]
    edges = [0.0, *cuts, math.inf]
    return [(max(edges[i], 0.0), edges[i + 1], signs[i]) for i in range(len(signs))]


def stance_intervals(
    profile: InvestorProfile,
    c0: float,
    want: Stance,
    root_spec: RootSpec = RootSpec(),
    quad_spec: QuadratureSpec = QuadratureSpec(),
    scan_step: float = 0.05,
    thresholds: ThresholdResult | None = None,
) -> list[Interval]:
    """Open market-price intervals on which the investor holds ``want``.

    Built from the solved thresholds: outside the behavioural regime the
    stance is fixed (buyer below it, seller above), inside it flips at
    every crossing.
    """
    if want is Stance.NEUTRAL:
        raise DomainError("neutral stance holds only at isolated prices")
    sign = 1 if want is Stance.BUYER else -1
    try:
        res = thresholds or solve_stance_threshold(
            profile, c0, root_spec=root_spec, quad_spec=quad_spec, scan_step=scan_step
        )
    except NoSignChangeError:
        lo, hi = relevance_range(profile, c0)
        gap = stance_gap(profile, c0, 0.5 * (lo + hi), quad_spec)
        return [(0.0, math.inf)] if (gap > 0) == (sign > 0) else []
    return [(lo, hi) for lo, hi, s in _signed_segments(res, c0) if s == sign and hi > lo]


def _intersect(xs: Sequence[Interval], ys: Sequence[Interval]) -> list[Interval]:
    out = []
    for a0, a1 in xs:
        for b0, b1 in ys:
            lo, hi = max(a0, b0), min(a1, b1)
            if hi > lo:
                out.append((lo, hi))
    return sorted(out)


@dataclass(frozen=True)
class CoexistenceBand:
    """Open market-price intervals where the buyer bids and the seller offers."""

    intervals: tuple[Interval, ...]

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def __contains__(self, price: float) -> bool:
        return any(lo < price < hi for lo, hi in self.intervals)


def coexistence_interval(
    buyer: InvestorProfile,
    seller: InvestorProfile,
    c0: float,
    quad_spec: QuadratureSpec = QuadratureSpec(),
    root_spec: RootSpec = RootSpec(),
    scan_step: float = 0.05,
) -> CoexistenceBand:
    """Prices at which ``buyer`` buys while ``seller`` sells.

    The stance half-lines are clipped to both investors' relevance ranges,
    outside which the scope no longer responds to the deviation.
    """
    bids = stance_intervals(buyer, c0, Stance.BUYER, root_spec, quad_spec, scan_step)
    offers = stance_intervals(seller, c0, Stance.SELLER, root_spec, quad_spec, scan_step)
    (b0, b1), (s0, s1) = relevance_range(buyer, c0), relevance_range(seller, c0)
    window = _intersect([(c0 + b0, c0 + b1)], [(c0 + s0, c0 + s1)])
    return CoexistenceBand(tuple(_intersect(_intersect(bids, offers), window)))


@dataclass(frozen=True)
class BalanceReport:
    """Stances of a population at one market price.

    ``stances`` maps investor name to its result, or to ``None`` when the
    computation failed (the reason is in ``errors``).
    """

    market_price: float
    stances: dict[str, StanceResult | None]
    errors: dict[str, str]

    def _count(self, kind: Stance) -> int:
        return sum(1 for r in self.stances.values() if r is not None and r.stance is kind)

    @property
    def buyer_count(self) -> int:
        return self._count(Stance.BUYER)

    @property
    def seller_count(self) -> int:
        return self._count(Stance.SELLER)

    @property
    def neutral_count(self) -> int:
        return self._count(Stance.NEUTRAL)

    @property
    def failed_count(self) -> int:
        return len(self.errors)

    @property
    def coexistence(self) -> bool:
        return self.buyer_count > 0 and self.seller_count > 0


def market_report(
    profiles: Mapping[str, InvestorProfile] | Sequence[InvestorProfile],
    ctx: MarketContext,
    eps: float = DEFAULT_NEUTRAL_EPS,
    spec: QuadratureSpec = QuadratureSpec(),
) -> BalanceReport:
    if not isinstance(profiles, Mapping):
        profiles = {f"investor_{i}": p for i, p in enumerate(profiles)}
    if not profiles:
        raise DomainError("population must not be empty")
    stances: dict[str, StanceResult | None] = {}
    errors: dict[str, str] = {}
    for name, prof in profiles.items():
        try:
            stances[name] = stance(prof, ctx, eps, spec)
        except BPVError as exc:
            stances[name] = None
            errors[name] = f"{type(exc).__name__}: {exc}"
    return BalanceReport(ctx.market_price, stances, errors)
