from __future__ import annotations

from importlib import resources

import numpy as np
import pytest
from hypothesis import strategies as st

from bpv import InvestorProfile, triangular_reference

C0 = 100.0


@pytest.fixture(scope="session")
def tri():
    return triangular_reference()


@pytest.fixture(scope="session")
def investor_a(tri):
    return InvestorProfile(95.0, 110.0, 0.2, tri)


@pytest.fixture(scope="session")
def investor_b(tri):
    return InvestorProfile(90.0, 105.0, 0.8, tri)


@pytest.fixture(scope="session")
def symmetric(tri):
    return InvestorProfile(92.0, 108.0, 0.5, tri)


@pytest.fixture(scope="session")
def case_study_config_path():
    return resources.files("bpv") / "data" / "case_study.json"


@st.composite
def profiles(draw, max_alpha: float = 0.95):
    """Random triangular profile around C0 as (profile, lower_width, upper_width)."""
    down = draw(st.floats(0.5, 30.0))
    up = draw(st.floats(0.5, 30.0))
    alpha = draw(st.floats(0.0, max_alpha))
    return InvestorProfile(C0 - down, C0 + up, alpha, triangular_reference())


def random_profile(rng: np.random.Generator, max_alpha: float = 0.95) -> InvestorProfile:
    down, up = rng.uniform(0.5, 30.0, size=2)
    return InvestorProfile(C0 - down, C0 + up, float(rng.uniform(0.0, max_alpha)), triangular_reference())


def oracle_scope(profile: InvestorProfile, c0: float, dc: float) -> tuple[float, float, float]:
    """Clamped weighted-average bounds, straight from their definition."""
    anchor = c0 + dc
    lo = min(profile.alpha * (profile.c_min + dc) + (1 - profile.alpha) * profile.c_min, anchor)
    hi = max(profile.alpha * (profile.c_max + dc) + (1 - profile.alpha) * profile.c_max, anchor)
    return lo, anchor, hi


def oracle_membership(profile: InvestorProfile, c0: float, dc: float, ps: np.ndarray) -> np.ndarray:
    """Standardized-form acceptance, re-implemented with numpy only.

    Deliberately shares no code with the package kernels. Points at the
    anchor take the value 1.
    """
    lo, anchor, hi = oracle_scope(profile, c0, dc)
    ps = np.asarray(ps, dtype=float)
    beta = np.zeros_like(ps)
    left = ps < anchor
    right = ps > anchor
    with np.errstate(divide="ignore", invalid="ignore"):
        beta[left] = (ps[left] - anchor) / (anchor - lo)
        beta[right] = (ps[right] - anchor) / (hi - anchor)
    beta = np.clip(beta, -1, 1)
    v0 = np.interp(beta, profile.reference.betas, profile.reference.values)
    gamma = 1 - np.abs(beta)
    if dc < 0:
        theta = np.where(beta >= 0, 1.0, 0.0)
    elif dc > 0:
        theta = np.where(beta <= 0, 1.0, 0.0)
    else:
        theta = np.ones_like(beta)
    w = gamma * abs(dc)
    out = v0 / (1 + w) + w / (1 + w) * theta
    out[(ps < lo) | (ps > hi)] = 0.0
    return out


def oracle_centroid(profile: InvestorProfile, c0: float, dc: float, cells: int) -> float:
    """Midpoint Riemann centroid split at the anchor."""
    lo, anchor, hi = oracle_scope(profile, c0, dc)
    n_left = int(round(cells * (anchor - lo) / (hi - lo)))
    m0 = m1 = 0.0
    for a, b, n in ((lo, anchor, n_left), (anchor, hi, cells - n_left)):
        if b > a and n > 0:
            h = (b - a) / n
            x = a + (np.arange(n) + 0.5) * h
            f = oracle_membership(profile, c0, dc, x)
            m0 += f.sum() * h
            m1 += ((x - anchor) * f).sum() * h
    return anchor + m1 / m0


def triangle_centroid(lo: float, apex: float, hi: float) -> float:
    return (lo + apex + hi) / 3.0
