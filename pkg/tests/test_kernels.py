import numpy as np
import pytest

from bpv import MarketContext, scope
from bpv._kernels import build_kernels, numba_requested
from bpv.acceptance import knot_prices
from bpv.profile import InvestorProfile
from bpv.acceptance import trapezoidal_reference
from conftest import C0, random_profile

numba = pytest.importorskip("numba")


@pytest.fixture(scope="module")
def both():
    return build_kernels(None), build_kernels(numba.njit(cache=False))


def _cases(n=25):
    rng = np.random.default_rng(5)
    for i in range(n):
        prof = random_profile(rng)
        if i % 5 == 0:
            prof = InvestorProfile(prof.c_min, prof.c_max, prof.alpha, trapezoidal_reference(0.2))
        dc = float(rng.uniform(-30, 30))
        yield prof, dc


def test_flag_parsing(monkeypatch):
    for val in ("0", "false", "off", "no"):
        monkeypatch.setenv("BPV_NUMBA", val)
        assert not numba_requested()
    monkeypatch.setenv("BPV_NUMBA", "1")
    assert numba_requested()


def test_membership_parity(both):
    py, jit = both
    assert not py.compiled and jit.compiled
    for prof, dc in _cases():
        sc = scope(prof, C0, dc)
        ref = prof.reference
        ps = np.linspace(sc.lo - 1, sc.hi + 1, 999)
        args = (sc.lo, sc.anchor, sc.hi, dc, ref.betas, ref.values)
        a = py.membership_many(ps, *args)
        b = jit.membership_loop(ps, *args)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(b, [jit.membership(p, *args) for p in ps])


def test_moment_parity(both):
    py, jit = both
    for prof, dc in _cases(10):
        sc = scope(prof, C0, dc)
        ref = prof.reference
        breaks = np.array(knot_prices(sc, ref))
        args = (breaks, sc.anchor, sc.lo, sc.anchor, sc.hi, dc, ref.betas, ref.values, 1e-10, 1e-12, 50)
        m_py = py.curve_moments(*args)
        m_jit = jit.curve_moments(*args)
        assert np.isnan(m_py[2]) and np.isnan(m_jit[2])
        assert m_jit[0] == pytest.approx(m_py[0], rel=1e-13)
        assert m_jit[1] == pytest.approx(m_py[1], rel=1e-11, abs=1e-13)
        r_py = py.riemann_moments(sc.lo, sc.anchor, sc.hi, 20000, dc, ref.betas, ref.values)
        r_jit = jit.riemann_loop(sc.lo, sc.anchor, sc.hi, 20000, dc, ref.betas, ref.values)
        assert r_jit[0] == pytest.approx(r_py[0], rel=1e-10)
        assert r_jit[1] == pytest.approx(r_py[1], rel=1e-8, abs=1e-10)


def test_quadrature_failure_reported(both):
    py, _ = both
    prof = random_profile(np.random.default_rng(0))
    sc = scope(prof, C0, 1.0)
    ref = prof.reference
    breaks = np.array([sc.lo, sc.anchor, sc.hi])
    out = py.curve_moments(breaks, sc.anchor, sc.lo, sc.anchor, sc.hi, 1.0, ref.betas, ref.values,
                           1e-300, 1e-300, 3)
    assert not np.isnan(out[2])


def test_public_api_uses_selected_path():
    from bpv import _kernels, average_ppv

    assert _kernels.USE_NUMBA == _kernels.kernels.compiled
    prof = random_profile(np.random.default_rng(1))
    assert np.isfinite(average_ppv(prof, MarketContext(C0, C0)))
