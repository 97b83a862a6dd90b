"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each kernel runs on identical inputs through ``qpgordon._core`` and
``qpgordon._pycore``; the table lists the best wall time of each, the
speed-up, and the largest discrepancy between the two outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qpgordon import _pycore

try:
    from qpgordon import _core
except ImportError:  # pragma: no cover - extension not built
    _core = None


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def cases(scale: float):
    rng = np.random.default_rng(0)
    P, n = int(64 * scale) or 1, int(4096 * scale) or 1
    w = 3.0 - 4.0 * np.cos(2 * np.pi * rng.random((P, n)))
    cps = np.array([n // 4, n // 2, n])
    a, b, c, d = rng.normal(size=(4, P, n))
    m = int(4001 * scale) or 3
    diag = 4.0 * np.cos(2 * np.pi * rng.random(m))
    off2 = np.ones(m - 1)
    ones = np.ones(m - 1)
    rhs = rng.normal(size=m)
    xs = np.sort(rng.random(int(1_000_000 * scale) or 1))
    k = m // 2
    return {
        "chain_schrodinger": lambda mod: mod.chain_schrodinger(w, cps),
        "chain_generic": lambda mod: mod.chain_generic(a, b, c, d, cps),
        "sturm_counts": lambda mod: mod.sturm_counts(diag, off2, np.linspace(-6, 6, 256)),
        "bisect_eigenvalues": lambda mod: mod.bisect_eigenvalues(diag, off2, -7, 7, k - 32, k + 32,
                                                                 1e-14),
        "tridiag_solve": lambda mod: mod.tridiag_solve(ones, diag - 0.1, ones, rhs),
        "star_discrepancy_sorted": lambda mod: mod.star_discrepancy_sorted(xs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not available; only the fallback can run")
    print(f"{'kernel':26s} {'cython [s]':>11s} {'python [s]':>11s} {'speed-up':>9s} {'max diff':>10s}")
    for name, fn in cases(args.scale).items():
        tp, outp = _best(lambda: fn(_pycore), args.repeat)
        if _core is None:
            print(f"{name:26s} {'-':>11s} {tp:11.4f} {'-':>9s} {'-':>10s}")
            continue
        tc, outc = _best(lambda: fn(_core), args.repeat)
        print(f"{name:26s} {tc:11.4f} {tp:11.4f} {tp / tc:9.1f} {_diff(outc, outp):10.2e}")


if __name__ == "__main__":
    main()
