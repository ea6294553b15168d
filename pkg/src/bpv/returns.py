"""Return rates under a random future value and an imprecise present value.

For a fixed future-value scenario the return rate inherits the fuzziness of
the present value through the extension principle. Both supported return
kinds are strictly decreasing in the present value, so every rate has a
single preimage and its membership is just the BPV membership there. Across
scenarios this gives a probabilistic fuzzy set (a Hiroto set), sampled here
by Monte Carlo.

Scenario ``i`` draws from its own generator, spawned from
``numpy.random.SeedSequence(seed)`` and driving ``PCG64``, so results do not
depend on evaluation order.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from bpv.acceptance import MembershipCurve, membership_curve
from bpv.errors import DomainError, SamplingError
from bpv.profile import InvestorProfile, MarketContext


class ReturnKind(enum.Enum):
    SIMPLE = "simple"
    LOGARITHMIC = "logarithmic"

    def rate(self, v0, vt):
        """Return rate of buying at ``v0`` and holding to ``vt`` (arrays allowed)."""
        v0 = np.asarray(v0, dtype=np.float64)
        vt = np.asarray(vt, dtype=np.float64)
        if np.any(v0 <= 0) or np.any(vt <= 0):
            raise DomainError("present and future values must be positive")
        if self is ReturnKind.SIMPLE:
            out = vt / v0 - 1.0
        else:
            out = np.log(vt / v0)
        return float(out) if out.ndim == 0 else out

    def invert(self, r, vt):
        """Present value that earns ``r`` when the future value is ``vt``."""
        r = np.asarray(r, dtype=np.float64)
        vt = np.asarray(vt, dtype=np.float64)
        if np.any(vt <= 0):
            raise DomainError("future value must be positive")
        if self is ReturnKind.SIMPLE:
            if np.any(r <= -1.0):
                raise DomainError("simple return rate must exceed -1")
            out = vt / (1.0 + r)
        else:
            out = vt * np.exp(-r)
        return float(out) if out.ndim == 0 else out


def return_rate(kind: ReturnKind, v0: float, vt: float) -> float:
    return kind.rate(v0, vt)


def invert_present_value(kind: ReturnKind, r: float, vt: float) -> float:
    return kind.invert(r, vt)


_SNAP_ULPS = 8.0


def _preimage(curve: MembershipCurve, kind: ReturnKind, vt: float, rs) -> np.ndarray:
    # the inversion round-trips to within a few ulps; snap onto the anchor so
    # the rate of the market price keeps membership 1 even on a one-sided scope
    p = np.atleast_1d(kind.invert(np.asarray(rs, dtype=np.float64), vt))
    anchor = curve.scope.anchor
    near = np.abs(p - anchor) <= _SNAP_ULPS * np.spacing(abs(anchor))
    return np.where(near, anchor, p)


def hiroto_membership(curve: MembershipCurve, kind: ReturnKind, vt: float, r: float) -> float:
    """Membership of rate ``r`` in the fuzzy return for future value ``vt``."""
    return curve(float(_preimage(curve, kind, vt, r)[0]))


def hiroto_membership_many(curve: MembershipCurve, kind: ReturnKind, vt: float, rs) -> np.ndarray:
    return curve.evaluate_many(_preimage(curve, kind, vt, rs))


# -- future value models --------------------------------------------------------------------


@dataclass(frozen=True)
class FutureValueModel:
    """A sampler of future values, optionally with its CDF."""

    sampler: Callable[[np.random.Generator], float]
    cdf: Callable[[float], float] | None = None
    name: str = "custom"

    @classmethod
    def point_mass(cls, value: float) -> FutureValueModel:
        value = float(value)
        if not value > 0:
            raise DomainError(f"future value must be positive, got {value!r}")
        return cls(lambda rng: value, lambda x: 1.0 if x >= value else 0.0, "point_mass")

    @classmethod
    def lognormal(cls, loc: float, scale: float) -> FutureValueModel:
        """``log V ~ Normal(loc, scale)``."""
        if not scale > 0:
            raise DomainError(f"lognormal scale must be positive, got {scale!r}")

        def cdf(x: float) -> float:
            if x <= 0:
                return 0.0
            return 0.5 * math.erfc(-(math.log(x) - loc) / (scale * math.sqrt(2.0)))

        return cls(lambda rng: float(rng.lognormal(loc, scale)), cdf, "lognormal")

    @classmethod
    def empirical(cls, values: Sequence[float], weights: Sequence[float] | None = None) -> FutureValueModel:
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0 or np.any(vals <= 0):
            raise DomainError("empirical future values must be a non-empty list of positive numbers")
        if weights is None:
            w = np.full(vals.size, 1.0 / vals.size)
        else:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != vals.shape or np.any(w < 0) or not w.sum() > 0:
                raise DomainError("weights must be non-negative, one per value, not all zero")
            w = w / w.sum()
        order = np.argsort(vals)
        sorted_vals, cum = vals[order], np.cumsum(w[order])

        def cdf(x: float) -> float:
            i = np.searchsorted(sorted_vals, x, side="right")
            return 0.0 if i == 0 else float(min(cum[i - 1], 1.0))

        return cls(lambda rng: float(rng.choice(vals, p=w)), cdf, "empirical")


# -- Hiroto sets ----------------------------------------------------------------------------


@dataclass(frozen=True)
class HirotoSet:
    """Per-scenario fuzzy memberships of the return rate over ``r_grid``.

    ``memberships[i, j]`` is the membership of ``r_grid[j]`` in scenario ``i``
    whose future value was ``future_values[i]``.
    """

    r_grid: np.ndarray
    future_values: np.ndarray
    memberships: np.ndarray
    seed: int
    kind: ReturnKind

    @property
    def n_scenarios(self) -> int:
        return int(self.future_values.shape[0])

    @property
    def scenarios(self) -> Iterator[tuple[float, np.ndarray]]:
        for vt, row in zip(self.future_values, self.memberships):
            yield float(vt), row


def _check_grid(kind: ReturnKind, r_grid) -> np.ndarray:
    grid = np.asarray(r_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("return grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
        raise DomainError("return grid must be finite and strictly increasing")
    if kind is ReturnKind.SIMPLE and grid[0] <= -1.0:
        raise DomainError("simple return grid must stay above -1")
    return grid


def scenario_generators(seed: int, n: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def sample_hiroto_curve(
    curve: MembershipCurve,
    fv_model: FutureValueModel,
    kind: ReturnKind,
    r_grid,
    n_scenarios: int,
    seed: int,
) -> HirotoSet:
    if n_scenarios < 1:
        raise DomainError(f"need at least one scenario, got {n_scenarios!r}")
    grid = _check_grid(kind, r_grid)
    values = np.empty(n_scenarios)
    rows = np.empty((n_scenarios, grid.size))
    for i, rng in enumerate(scenario_generators(seed, n_scenarios)):
        try:
            vt = float(fv_model.sampler(rng))
        except Exception as exc:  # sampler is user code
            raise SamplingError(i, f"sampler raised {type(exc).__name__}: {exc}") from exc
        if not (math.isfinite(vt) and vt > 0):
            raise SamplingError(i, f"sampled future value {vt!r} is not a positive number")
        values[i] = vt
        rows[i] = hiroto_membership_many(curve, kind, vt, grid)
    return HirotoSet(grid, values, rows, int(seed), kind)


def sample_hiroto(
    profile: InvestorProfile,
    ctx: MarketContext,
    fv_model: FutureValueModel,
    kind: ReturnKind,
    r_grid,
    n_scenarios: int,
    seed: int,
) -> HirotoSet:
    return sample_hiroto_curve(membership_curve(profile, ctx), fv_model, kind, r_grid, n_scenarios, seed)


def expected_membership(h: HirotoSet) -> np.ndarray:
    """Scenario average of the memberships at each grid rate."""
    if h.n_scenarios < 1:
        raise DomainError("Hiroto set has no scenarios")
    return h.memberships.mean(axis=0)


def future_value_cdf(
    return_cdf: Callable[[float], float], market_price: float, kind: ReturnKind
) -> Callable[[float], float]:
    """CDF of the future value implied by a return-rate CDF at the market price.

    The rate is increasing in the future value, so ``P(V <= x)`` equals
    ``P(r <= rate(market_price, x))``.
    """
    if not market_price > 0:
        raise DomainError(f"market price must be positive, got {market_price!r}")

    def cdf(x: float) -> float:
        if not x > 0:
            raise DomainError(f"future value must be positive, got {x!r}")
        return float(return_cdf(kind.rate(market_price, x)))

    return cdf
