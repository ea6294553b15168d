"""Compare the numba-compiled kernels with the pure numpy/Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both kernel sets are built in-process, so the ``BPV_NUMBA`` flag does not
matter here. Compile time is reported separately from steady-state timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bpv import InvestorProfile, scope, triangular_reference
from bpv._kernels import build_kernels
from bpv.acceptance import knot_prices

C0 = 100.0


def _case(dc: float):
    prof = InvestorProfile(95.0, 110.0, 0.2, triangular_reference())
    sc = scope(prof, C0, dc)
    ref = prof.reference
    return sc, ref, np.array(knot_prices(sc, ref))


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    import numba

    t0 = time.perf_counter()
    jit = build_kernels(numba.njit(cache=False))
    sc, ref, breaks = _case(2.0)
    ps = np.linspace(sc.lo, sc.hi, 100_000)
    common = (sc.lo, sc.anchor, sc.hi, 2.0, ref.betas, ref.values)
    jit.membership_loop(ps[:2], *common)
    jit.curve_moments(breaks, sc.anchor, *common, 1e-10, 1e-12, 50)
    jit.riemann_loop(sc.lo, sc.anchor, sc.hi, 10, 2.0, ref.betas, ref.values)
    print(f"numba compile: {time.perf_counter() - t0:.2f}s")

    py = build_kernels(None)
    # (fallback job, compiled job); the array kernels race numpy against numba loops
    jobs = {
        "membership (1e5 points)": (
            lambda: py.membership_many(ps, *common),
            lambda: jit.membership_loop(ps, *common),
        ),
        "curve_moments (adaptive Simpson)": (
            lambda: py.curve_moments(breaks, sc.anchor, *common, 1e-10, 1e-12, 50),
            lambda: jit.curve_moments(breaks, sc.anchor, *common, 1e-10, 1e-12, 50),
        ),
        "riemann moments (1e6 cells)": (
            lambda: py.riemann_moments(sc.lo, sc.anchor, sc.hi, 1_000_000, 2.0, ref.betas, ref.values),
            lambda: jit.riemann_loop(sc.lo, sc.anchor, sc.hi, 1_000_000, 2.0, ref.betas, ref.values),
        ),
    }
    print(f"{'kernel':36s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, (job_py, job_jit) in jobs.items():
        t_py = _best(job_py, args.repeat)
        t_jit = _best(job_jit, args.repeat)
        print(f"{name:36s} {t_py * 1e3:10.3f}ms {t_jit * 1e3:10.3f}ms {t_py / t_jit:7.1f}x")


if __name__ == "__main__":
    main()
