"""Inner loops: acceptance / membership evaluation and centroid moments.

The functions are written once and built twice by :func:`build_kernels`:
compiled with ``numba.njit`` or left as plain Python. Whole-array kernels
use numpy-vectorised variants either way, since those beat the compiled
loops. The active set is chosen at import time; ``BPV_NUMBA=0`` forces
the fallback.

Reference distributions enter as two float64 arrays ``kb`` (standardized
knots, strictly increasing from -1 to 1) and ``kv`` (values at the knots).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_FALSY = {"0", "false", "no", "off"}


def numba_requested() -> bool:
    return os.environ.get("BPV_NUMBA", "1").strip().lower() not in _FALSY


def build_kernels(jit=None) -> SimpleNamespace:
    """Return the kernel namespace; ``jit=None`` gives the pure numpy path."""
    compiled = jit is not None
    if jit is None:
        def jit(fn):
            return fn

    @jit
    def reference_value(beta, kb, kv):
        n = kb.shape[0]
        if beta <= kb[0]:
            return kv[0]
        if beta >= kb[n - 1]:
            return kv[n - 1]
        i = 0
        j = n - 1
        while j - i > 1:
            m = (i + j) // 2
            if kb[m] <= beta:
                i = m
            else:
                j = m
        t = (beta - kb[i]) / (kb[j] - kb[i])
        return kv[i] + t * (kv[j] - kv[i])

    @jit
    def forecast(dc, beta):
        if dc < 0.0:
            return 1.0 if beta >= 0.0 else 0.0
        if dc > 0.0:
            return 1.0 if beta <= 0.0 else 0.0
        return 1.0

    @jit
    def acceptance(beta, dc, kb, kv):
        w = (1.0 - abs(beta)) * abs(dc)
        return (reference_value(beta, kb, kv) + w * forecast(dc, beta)) / (1.0 + w)

    @jit
    def membership(p, lo, anchor, hi, dc, kb, kv):
        if p < lo or p > hi:
            return 0.0
        if p == anchor:
            return acceptance(0.0, dc, kb, kv)
        if p == lo:
            beta = -1.0
        elif p == hi:
            beta = 1.0
        elif p < anchor:
            beta = (p - anchor) / (anchor - lo)
        else:
            beta = (p - anchor) / (hi - anchor)
        if beta < -1.0:
            beta = -1.0
        elif beta > 1.0:
            beta = 1.0
        return acceptance(beta, dc, kb, kv)

    @jit
    def membership_loop(ps, lo, anchor, hi, dc, kb, kv):
        out = np.empty(ps.shape[0])
        for i in range(ps.shape[0]):
            out[i] = membership(ps[i], lo, anchor, hi, dc, kb, kv)
        return out

    def membership_numpy(ps, lo, anchor, hi, dc, kb, kv):
        ps = np.asarray(ps, dtype=np.float64)
        left = ps < anchor
        right = ps > anchor
        beta = np.zeros_like(ps)
        if anchor > lo:
            beta = np.where(left, (ps - anchor) / (anchor - lo), beta)
        if hi > anchor:
            beta = np.where(right, (ps - anchor) / (hi - anchor), beta)
        beta = np.where(left & (ps == lo), -1.0, beta)
        beta = np.where(right & (ps == hi), 1.0, beta)
        beta = np.clip(beta, -1.0, 1.0)
        if dc < 0.0:
            theta = (beta >= 0.0).astype(np.float64)
        elif dc > 0.0:
            theta = (beta <= 0.0).astype(np.float64)
        else:
            theta = np.ones_like(beta)
        w = (1.0 - np.abs(beta)) * abs(dc)
        out = (np.interp(beta, kb, kv) + w * theta) / (1.0 + w)
        out[(ps < lo) | (ps > hi)] = 0.0
        return out

    @jit
    def piece_moments(a, b, shift, lo, anchor, hi, dc, kb, kv, rel_tol, abs_tol, max_depth):
        """Adaptive Simpson for the mass and the ``shift``-centred first moment on [a, b].

        End values are sampled one ulp inside so that a jump sitting exactly
        on ``a`` or ``b`` does not leak into the piece. Returns
        ``(m0, m1, failed_a, failed_b)``; the failure pair is NaN on success.
        """
        if b <= a:
            return 0.0, 0.0, np.nan, np.nan
        fa = membership(np.nextafter(a, b), lo, anchor, hi, dc, kb, kv)
        fb = membership(np.nextafter(b, a), lo, anchor, hi, dc, kb, kv)
        m = 0.5 * (a + b)
        fm = membership(m, lo, anchor, hi, dc, kb, kv)
        h6 = (b - a) / 6.0
        s0 = h6 * (fa + 4.0 * fm + fb)
        s1 = h6 * ((a - shift) * fa + 4.0 * (m - shift) * fm + (b - shift) * fb)
        span = max(abs(a - shift), abs(b - shift))
        eps0 = max(abs_tol, rel_tol * abs(s0))
        eps1 = max(abs_tol, rel_tol * (abs(s1) + abs(s0) * span))

        size = max_depth + 3
        st_a = np.empty(size)
        st_b = np.empty(size)
        st_fa = np.empty(size)
        st_fm = np.empty(size)
        st_fb = np.empty(size)
        st_s0 = np.empty(size)
        st_s1 = np.empty(size)
        st_e0 = np.empty(size)
        st_e1 = np.empty(size)
        st_d = np.empty(size, dtype=np.int64)
        top = 0
        st_a[0] = a
        st_b[0] = b
        st_fa[0] = fa
        st_fm[0] = fm
        st_fb[0] = fb
        st_s0[0] = s0
        st_s1[0] = s1
        st_e0[0] = eps0
        st_e1[0] = eps1
        st_d[0] = 0
        top = 1
        acc0 = 0.0
        acc1 = 0.0
        while top > 0:
            top -= 1
            x0 = st_a[top]
            x1 = st_b[top]
            f0 = st_fa[top]
            fmid = st_fm[top]
            f1 = st_fb[top]
            w0 = st_s0[top]
            w1 = st_s1[top]
            e0 = st_e0[top]
            e1 = st_e1[top]
            depth = st_d[top]
            xm = 0.5 * (x0 + x1)
            xl = 0.5 * (x0 + xm)
            xr = 0.5 * (xm + x1)
            fl = membership(xl, lo, anchor, hi, dc, kb, kv)
            fr = membership(xr, lo, anchor, hi, dc, kb, kv)
            q = (x1 - x0) / 12.0
            l0 = q * (f0 + 4.0 * fl + fmid)
            r0 = q * (fmid + 4.0 * fr + f1)
            l1 = q * ((x0 - shift) * f0 + 4.0 * (xl - shift) * fl + (xm - shift) * fmid)
            r1 = q * ((xm - shift) * fmid + 4.0 * (xr - shift) * fr + (x1 - shift) * f1)
            d0 = l0 + r0 - w0
            d1 = l1 + r1 - w1
            if abs(d0) <= 15.0 * e0 and abs(d1) <= 15.0 * e1:
                acc0 += l0 + r0 + d0 / 15.0
                acc1 += l1 + r1 + d1 / 15.0
                continue
            if depth >= max_depth or xl <= x0 or xr >= x1:
                return acc0, acc1, x0, x1
            st_a[top] = xm
            st_b[top] = x1
            st_fa[top] = fmid
            st_fm[top] = fr
            st_fb[top] = f1
            st_s0[top] = r0
            st_s1[top] = r1
            st_e0[top] = 0.5 * e0
            st_e1[top] = 0.5 * e1
            st_d[top] = depth + 1
            top += 1
            st_a[top] = x0
            st_b[top] = xm
            st_fa[top] = f0
            st_fm[top] = fl
            st_fb[top] = fmid
            st_s0[top] = l0
            st_s1[top] = l1
            st_e0[top] = 0.5 * e0
            st_e1[top] = 0.5 * e1
            st_d[top] = depth + 1
            top += 1
        return acc0, acc1, np.nan, np.nan

    @jit
    def curve_moments(breaks, shift, lo, anchor, hi, dc, kb, kv, rel_tol, abs_tol, max_depth):
        """Sum :func:`piece_moments` over consecutive ``breaks`` (sorted)."""
        m0 = 0.0
        m1 = 0.0
        for i in range(breaks.shape[0] - 1):
            p0, p1, bad_a, bad_b = piece_moments(
                breaks[i], breaks[i + 1], shift, lo, anchor, hi, dc, kb, kv,
                rel_tol, abs_tol, max_depth,
            )
            m0 += p0
            m1 += p1
            if not np.isnan(bad_a):
                return m0, m1, bad_a, bad_b
        return m0, m1, np.nan, np.nan

    @jit
    def riemann_moments(lo, anchor, hi, cells, dc, kb, kv):
        """Midpoint-rule mass and anchor-centred moment, split at the anchor."""
        m0 = 0.0
        m1 = 0.0
        total = hi - lo
        if total <= 0.0:
            return 0.0, 0.0
        n_left = int(round(cells * (anchor - lo) / total))
        n_right = cells - n_left
        if anchor > lo and n_left > 0:
            h = (anchor - lo) / n_left
            for i in range(n_left):
                x = lo + (i + 0.5) * h
                f = membership(x, lo, anchor, hi, dc, kb, kv)
                m0 += f * h
                m1 += (x - anchor) * f * h
        if hi > anchor and n_right > 0:
            h = (hi - anchor) / n_right
            for i in range(n_right):
                x = anchor + (i + 0.5) * h
                f = membership(x, lo, anchor, hi, dc, kb, kv)
                m0 += f * h
                m1 += (x - anchor) * f * h
        return m0, m1

    def riemann_moments_numpy(lo, anchor, hi, cells, dc, kb, kv):
        total = hi - lo
        if total <= 0.0:
            return 0.0, 0.0
        n_left = int(round(cells * (anchor - lo) / total))
        n_right = cells - n_left
        m0 = 0.0
        m1 = 0.0
        for a, b, n in ((lo, anchor, n_left), (anchor, hi, n_right)):
            if b > a and n > 0:
                h = (b - a) / n
                x = a + (np.arange(n) + 0.5) * h
                f = membership_numpy(x, lo, anchor, hi, dc, kb, kv)
                m0 += float(f.sum()) * h
                m1 += float(((x - anchor) * f).sum()) * h
        return m0, m1

    return SimpleNamespace(
        compiled=compiled,
        reference_value=reference_value,
        forecast=forecast,
        acceptance=acceptance,
        membership=membership,
        # vectorized numpy beats the compiled loops on whole arrays (see
        # benchmarks/bench_kernels.py); the loops stay for parity checks
        membership_many=membership_numpy,
        membership_loop=membership_loop,
        piece_moments=piece_moments,
        curve_moments=curve_moments,
        riemann_moments=riemann_moments_numpy,
        riemann_loop=riemann_moments,
    )


def _load() -> SimpleNamespace:
    if numba_requested():
        try:
            import numba
        except ImportError:  # pragma: no cover - numba is an optional speedup
            return build_kernels(None)
        return build_kernels(numba.njit(cache=False, nogil=True))
    return build_kernels(None)


kernels = _load()
USE_NUMBA: bool = kernels.compiled
